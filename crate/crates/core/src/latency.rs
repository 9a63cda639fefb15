//! Onset detection on the combined event rate of both cameras: fine binning,
//! Gaussian smoothing, a one-sided CUSUM, threshold tuning by ROC sweep and
//! the latency-distribution report.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::events::{bin_counts, EventStream, RateSeries};
use crate::segment::Window;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CusumParams {
    pub bin_s: f64,
    /// Gaussian smoothing width.
    pub sigma_s: f64,
    /// Target rate as a multiple of the baseline rate.
    pub rate_multiplier: f64,
    pub min_consecutive_bins: usize,
    /// Decision threshold in units of the baseline standard deviation.
    pub h: f64,
    /// Half-width of the acceptance window around the population median onset.
    pub detect_window_s: f64,
    pub cooldown_s: f64,
}

impl Default for CusumParams {
    fn default() -> Self {
        CusumParams {
            bin_s: 0.0002,
            sigma_s: 0.0005,
            rate_multiplier: 4.0,
            min_consecutive_bins: 3,
            h: 5.0,
            detect_window_s: 0.1,
            cooldown_s: 0.0,
        }
    }
}

impl CusumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_s > 0.0) {
            return Err(Error::NonPositive("bin_s"));
        }
        if !(self.sigma_s >= 0.0) {
            return Err(Error::NonPositive("sigma_s"));
        }
        if !(self.rate_multiplier > 1.0) {
            return Err(Error::Config("rate_multiplier must exceed 1".into()));
        }
        if self.min_consecutive_bins == 0 {
            return Err(Error::NonPositive("min_consecutive_bins"));
        }
        if !(self.h > 0.0) {
            return Err(Error::NonPositive("h"));
        }
        if !(self.detect_window_s > 0.0) {
            return Err(Error::NonPositive("detect_window_s"));
        }
        if !(self.cooldown_s >= 0.0) {
            return Err(Error::NonPositive("cooldown_s"));
        }
        Ok(())
    }
}

/// Normalized Gaussian taps truncated at ±4 sigma.
pub fn gaussian_kernel(sigma_bins: f64) -> Vec<f64> {
    let radius = libm::ceil(4.0 * sigma_bins) as usize;
    if radius == 0 || !(sigma_bins > 0.0) {
        return alloc::vec![1.0];
    }
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            libm::exp(-0.5 * x * x / (sigma_bins * sigma_bins))
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for w in &mut k {
        *w /= sum;
    }
    k
}

/// Same-length convolution with zero padding outside the series.
pub fn smooth(series: &RateSeries, sigma_s: f64) -> RateSeries {
    let kernel = gaussian_kernel(sigma_s / series.bin_s);
    let r = kernel.len() / 2;
    let n = series.values.len();
    let values = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(n.saturating_sub(1));
            (lo..=hi).map(|j| series.values[j] * kernel[j + r - i]).sum()
        })
        .collect();
    RateSeries { start_s: series.start_s, bin_s: series.bin_s, values }
}

/// Merged-camera rate over `[t0_s, t0_s + n_bins * bin_s)`.
pub fn merged_rate(streams: &[&EventStream], t0_s: f64, n_bins: usize, bin_s: f64) -> RateSeries {
    let t1_s = t0_s + n_bins as f64 * bin_s;
    let mut values = alloc::vec![0.0; n_bins];
    for s in streams {
        let range = s.index_range_s(t0_s, t1_s);
        let counts = bin_counts(s.events()[range].iter().map(|e| s.aligned_s(e)), t0_s, bin_s, n_bins);
        for (v, c) in values.iter_mut().zip(counts) {
            *v += c;
        }
    }
    for v in &mut values {
        *v /= bin_s;
    }
    RateSeries { start_s: t0_s, bin_s, values }
}

/// Smoothed merged rate over `[t0_s, t1_s)`.
pub fn smoothed_rate(streams: &[&EventStream], t0_s: f64, t1_s: f64, bin_s: f64, sigma_s: f64) -> Result<RateSeries> {
    if !(bin_s > 0.0) {
        return Err(Error::NonPositive("bin_s"));
    }
    if !(sigma_s >= 0.0) {
        return Err(Error::NonPositive("sigma_s"));
    }
    let n = if t1_s > t0_s { libm::ceil((t1_s - t0_s) / bin_s - 1e-9) as usize } else { 0 };
    Ok(smooth(&merged_rate(streams, t0_s, n, bin_s), sigma_s))
}

/// Reference level of the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineStats {
    pub mu0: f64,
    pub sigma0: f64,
}

impl BaselineStats {
    /// Mean and standard deviation of smoothed baseline bins. An empty
    /// baseline counts as one event per window; a flat one falls back to the
    /// Poisson deviation of a single bin.
    pub fn from_bins(values: &[f64], bin_s: f64) -> Self {
        let duration = (values.len() as f64 * bin_s).max(bin_s);
        let mean = stats::mean(values).unwrap_or(0.0);
        let mu0 = if mean > 0.0 { mean } else { 1.0 / duration };
        let sd = stats::population_sd(values).unwrap_or(0.0);
        let sigma0 = if sd > 0.0 { sd } else { libm::sqrt(mu0 / bin_s) };
        BaselineStats { mu0, sigma0 }
    }
}

/// One-sided CUSUM alarms: times of the first bin of each qualifying run.
pub fn cusum_onsets(rate: &RateSeries, baseline: &BaselineStats, params: &CusumParams) -> Vec<f64> {
    let mu1 = params.rate_multiplier * baseline.mu0;
    let drift = 0.5 * (baseline.mu0 + mu1);
    let threshold = params.h * baseline.sigma0;
    let mut onsets = Vec::new();
    let mut s = 0.0f64;
    let mut run = 0usize;
    let mut suppress_until = f64::NEG_INFINITY;
    for (i, &x) in rate.values.iter().enumerate() {
        let t = rate.bin_start(i);
        if t < suppress_until - 1e-12 {
            s = 0.0;
            run = 0;
            continue;
        }
        s = (s + x - drift).max(0.0);
        if s > threshold {
            run += 1;
            if run >= params.min_consecutive_bins {
                let onset = rate.bin_start(i + 1 - run);
                onsets.push(onset);
                suppress_until = onset + params.cooldown_s;
                s = 0.0;
                run = 0;
            }
        } else {
            run = 0;
        }
    }
    onsets
}

/// A detection span with its own baseline estimate. `reference_s` is the
/// nominal onset that detected onsets are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencySnippet {
    pub rate: RateSeries,
    pub baseline: BaselineStats,
    pub reference_s: f64,
}

impl LatencySnippet {
    pub fn duration_s(&self) -> f64 {
        self.rate.values.len() as f64 * self.rate.bin_s
    }
}

/// Builds a snippet detecting over `detect` with statistics from
/// `baseline`, which should end where `detect` starts. Smoothing sees the
/// events just outside the span so the edges are not attenuated.
pub fn snippet(
    streams: &[&EventStream],
    detect: Window,
    baseline: Window,
    params: &CusumParams,
) -> Result<LatencySnippet> {
    params.validate()?;
    let bin = params.bin_s;
    let pad = libm::ceil(4.0 * params.sigma_s / bin) as usize;
    let n_base = libm::round((detect.start - baseline.start).max(0.0) / bin) as usize;
    let n_det = libm::round(detect.duration().max(0.0) / bin) as usize;
    let start = detect.start - (n_base + pad) as f64 * bin;
    let raw = merged_rate(streams, start, pad + n_base + n_det + pad, bin);
    let smoothed = smooth(&raw, params.sigma_s);
    let base = &smoothed.values[pad..pad + n_base];
    let det = smoothed.values[pad + n_base..pad + n_base + n_det].to_vec();
    Ok(LatencySnippet {
        rate: RateSeries { start_s: detect.start, bin_s: bin, values: det },
        baseline: BaselineStats::from_bins(base, bin),
        reference_s: detect.start,
    })
}

/// First alarm relative to the snippet's reference.
pub fn first_onset(snippet: &LatencySnippet, params: &CusumParams) -> Option<f64> {
    cusum_onsets(&snippet.rate, &snippet.baseline, params).first().map(|t| t - snippet.reference_s)
}

fn false_alarms(background: &[LatencySnippet], params: &CusumParams) -> (usize, f64) {
    let count = background.iter().map(|b| cusum_onsets(&b.rate, &b.baseline, params).len()).sum();
    let duration = background.iter().map(LatencySnippet::duration_s).sum();
    (count, duration)
}

struct Detection {
    onsets: Vec<Option<f64>>,
    median: Option<f64>,
    true_positive: Vec<bool>,
}

fn detect(trials: &[LatencySnippet], params: &CusumParams) -> Detection {
    let onsets: Vec<Option<f64>> = trials.iter().map(|t| first_onset(t, params)).collect();
    let detected: Vec<f64> = onsets.iter().flatten().copied().collect();
    let median = stats::median(&detected);
    let true_positive = onsets
        .iter()
        .map(|o| match (o, median) {
            (Some(t), Some(m)) => (t - m).abs() <= params.detect_window_s,
            _ => false,
        })
        .collect();
    Detection { onsets, median, true_positive }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RocPoint {
    pub h: f64,
    pub true_positive_rate: f64,
    pub false_alarm_rate_per_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tuning {
    pub h: f64,
    pub roc: Vec<RocPoint>,
}

/// Minimum TPR a tuned threshold must reach.
pub const TARGET_TPR: f64 = 0.95;
/// Smallest number of press trials accepted by [`tune_threshold`].
pub const MIN_TUNING_TRIALS: usize = 20;

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..n).map(|i| libm::exp(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// Default tuning grid.
pub fn default_h_grid() -> Vec<f64> {
    log_grid(0.5, 100.0, 47)
}

/// Largest grid `h` detecting at least 95% of the press trials within the
/// acceptance window; among equal `h` values the fewer false alarms win.
pub fn tune_threshold(
    trials: &[LatencySnippet],
    background: &[LatencySnippet],
    params: &CusumParams,
    grid: &[f64],
) -> Result<Tuning> {
    if trials.len() < MIN_TUNING_TRIALS {
        return Err(Error::Config(alloc::format!(
            "need at least {MIN_TUNING_TRIALS} press trials, got {}",
            trials.len()
        )));
    }
    if background.is_empty() {
        return Err(Error::Config("threshold tuning needs background snippets".into()));
    }
    if grid.is_empty() || grid.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Config("threshold grid must be non-empty and positive".into()));
    }
    let roc: Vec<RocPoint> = grid
        .iter()
        .map(|&h| {
            let p = CusumParams { h, ..*params };
            let d = detect(trials, &p);
            let tpr = d.true_positive.iter().filter(|&&b| b).count() as f64 / trials.len() as f64;
            let (n_fa, dur) = false_alarms(background, &p);
            RocPoint {
                h,
                true_positive_rate: tpr,
                false_alarm_rate_per_s: if dur > 0.0 { n_fa as f64 / dur } else { 0.0 },
            }
        })
        .collect();
    let best = roc
        .iter()
        .filter(|p| p.true_positive_rate >= TARGET_TPR)
        .max_by(|a, b| a.h.total_cmp(&b.h).then(b.false_alarm_rate_per_s.total_cmp(&a.false_alarm_rate_per_s)));
    match best {
        Some(p) => Ok(Tuning { h: p.h, roc }),
        None => {
            let top = roc
                .iter()
                .max_by(|a, b| a.true_positive_rate.total_cmp(&b.true_positive_rate).then(a.h.total_cmp(&b.h)));
            let (best_tpr, best_h) = top.map_or((0.0, f64::NAN), |p| (p.true_positive_rate, p.h));
            Err(Error::Tuning { best_tpr, best_h })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialOnset {
    pub trial: usize,
    /// First alarm relative to the nominal onset.
    pub onset_s: Option<f64>,
    /// Onset relative to the population median.
    pub centered_s: Option<f64>,
    pub true_positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatencyReport {
    pub h_used: f64,
    pub n_trials: usize,
    pub n_detected: usize,
    pub n_true_positive: usize,
    pub true_positive_rate: f64,
    pub median_onset_s: f64,
    pub p5_ms: f64,
    pub p95_ms: f64,
    pub latency_width_ms: f64,
    pub false_alarms: usize,
    pub background_duration_s: f64,
    pub false_alarm_rate_per_s: f64,
    pub cooldown_s: f64,
    pub onsets: Vec<TrialOnset>,
}

/// Detection statistics at threshold `h`. False alarms on the background
/// are counted with a cooldown equal to the latency width.
pub fn latency_report(
    trials: &[LatencySnippet],
    background: &[LatencySnippet],
    h: f64,
    params: &CusumParams,
) -> Result<LatencyReport> {
    let p = CusumParams { h, ..*params };
    p.validate()?;
    let d = detect(trials, &p);
    let median = d.median.ok_or(Error::UndefinedMetric("no trial produced an onset"))?;
    let tp: Vec<f64> =
        d.onsets.iter().zip(&d.true_positive).filter(|(_, &b)| b).filter_map(|(o, _)| o.map(|t| t - median)).collect();
    if tp.is_empty() {
        return Err(Error::UndefinedMetric("no true-positive onsets"));
    }
    let p5 = stats::percentile(&tp, 5.0).unwrap_or(0.0);
    let p95 = stats::percentile(&tp, 95.0).unwrap_or(0.0);
    let width_s = p95 - p5;
    let (n_fa, dur) = false_alarms(background, &CusumParams { cooldown_s: width_s, ..p });
    let onsets = d
        .onsets
        .iter()
        .zip(&d.true_positive)
        .enumerate()
        .map(|(trial, (o, &true_positive))| TrialOnset {
            trial,
            onset_s: *o,
            centered_s: o.map(|t| t - median),
            true_positive,
        })
        .collect();
    Ok(LatencyReport {
        h_used: h,
        n_trials: trials.len(),
        n_detected: d.onsets.iter().flatten().count(),
        n_true_positive: tp.len(),
        true_positive_rate: tp.len() as f64 / trials.len() as f64,
        median_onset_s: median,
        p5_ms: p5 * 1e3,
        p95_ms: p95 * 1e3,
        latency_width_ms: width_s * 1e3,
        false_alarms: n_fa,
        background_duration_s: dur,
        false_alarm_rate_per_s: if dur > 0.0 { n_fa as f64 / dur } else { 0.0 },
        cooldown_s: width_s,
        onsets,
    })
}
