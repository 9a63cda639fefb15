//! Bernoulli event thinning and the pass-rate versus reduction-factor sweep.
//!
//! Every event draws one `u64` from a ChaCha8 stream keyed by `(seed, camera)`
//! at word position `2 * ordinal`, so the keep decision for an event depends
//! only on its ordinal in the original stream and never on processing order.

use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::events::{crop_roi_tracked, EventStream};
use crate::geometry::CameraModel;
use crate::metrics::{evaluate, reference_p95, EvaluationReport, EvaluationSettings, PressOutcome};
use crate::pipeline::{localize_trial, prepare_run_owned, LocalizationResult, LocalizeParams};
use crate::segment::PressSchedule;
use crate::stats;

/// Thinning factors `2^0 ..= 2^10`.
pub fn default_factors() -> Vec<u32> {
    (0..=10).map(|e| 1u32 << e).collect()
}

fn keyed_rng(seed: u64, stream: &EventStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.camera.index() as u64);
    rng
}

#[inline]
fn keep(draw: u64, k: u32) -> bool {
    // top 53 bits as a uniform in [0, 1)
    ((draw >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < 1.0 / f64::from(k)
}

/// Keeps each event independently with probability `1/k`. `k <= 1` returns
/// the stream unchanged.
pub fn thin(stream: &EventStream, k: u32, seed: u64) -> EventStream {
    if k <= 1 {
        return stream.clone();
    }
    let mut rng = keyed_rng(seed, stream);
    let events = stream.events().iter().copied().filter(|_| keep(rng.next_u64(), k)).collect();
    stream.with_events(events)
}

/// Thinning of a sub-selection of a parent stream: `ordinals[i]` is the
/// parent ordinal of `stream.events()[i]`, and the keep decision is the one
/// [`thin`] would make for that parent event.
pub fn thin_with_ordinals(stream: &EventStream, ordinals: &[u32], k: u32, seed: u64) -> EventStream {
    assert_eq!(stream.len(), ordinals.len(), "one ordinal per event");
    if k <= 1 {
        return stream.clone();
    }
    let mut rng = keyed_rng(seed, stream);
    let mut next = 0u32;
    let events = stream
        .events()
        .iter()
        .zip(ordinals)
        .filter(|(_, &o)| {
            // seeking resets the block buffer, so only seek across gaps
            if o != next {
                rng.set_word_pos(2 * u128::from(o));
            }
            next = o + 1;
            keep(rng.next_u64(), k)
        })
        .map(|(e, _)| *e)
        .collect();
    stream.with_events(events)
}

/// Everything a sweep needs from a loaded, aligned and calibrated run. The
/// streams are held already cropped to the ROI, together with each event's
/// ordinal in the full stream, so thinning them matches thinning the full
/// recording.
#[derive(Debug, Clone)]
pub struct SweepInput {
    pub streams: [EventStream; 2],
    pub ordinals: [Vec<u32>; 2],
    pub schedule: PressSchedule,
    pub origin_s: f64,
    pub models: [CameraModel; 2],
    pub params: LocalizeParams,
    pub settings: EvaluationSettings,
}

impl SweepInput {
    /// Takes the full aligned streams and crops them in place.
    pub fn new(
        streams: [EventStream; 2],
        schedule: PressSchedule,
        origin_s: f64,
        models: [CameraModel; 2],
        params: LocalizeParams,
        settings: EvaluationSettings,
    ) -> Result<Self> {
        let [mut s1, mut s2] = streams;
        let o1 = crop_roi_tracked(&mut s1, params.roi.v_lo, params.roi.v_hi)?;
        let o2 = crop_roi_tracked(&mut s2, params.roi.v_lo, params.roi.v_hi)?;
        Ok(SweepInput { streams: [s1, s2], ordinals: [o1, o2], schedule, origin_s, models, params, settings })
    }

    fn thinned(&self, k: u32, seed: u64) -> [EventStream; 2] {
        [0, 1].map(|c| thin_with_ordinals(&self.streams[c], &self.ordinals[c], k, seed))
    }
}

/// One `(k, seed)` evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepCell {
    pub k: u32,
    pub seed: u64,
    /// `None` when no press survived.
    pub report: Option<EvaluationReport>,
    pub rmse_mm: Option<f64>,
    pub pass_rate_percent: f64,
    /// Mean dominant-cluster size over both cameras and all presses.
    pub mean_cluster_size: f64,
    pub n_valid: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub k: u32,
    pub pass_rate_mean: f64,
    pub pass_rate_sd: f64,
    pub rmse_mean_mm: Option<f64>,
    pub rmse_sd_mm: Option<f64>,
    pub mean_cluster_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AblationSweep {
    pub factors: Vec<u32>,
    pub seeds: Vec<u64>,
    /// Reference 95th-percentile error of the unthinned run.
    pub reference_p95_mm: f64,
    pub per_k_reference: bool,
    pub baseline: EvaluationReport,
    /// Row-major over `factors` then `seeds`.
    pub cells: Vec<SweepCell>,
    pub curve: Vec<CurvePoint>,
}

/// Unthinned localization with its evaluation; fixes the reference p95.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub results: Vec<LocalizationResult>,
    pub report: EvaluationReport,
}

pub fn baseline(input: &SweepInput) -> Result<Baseline> {
    let results = localize(input, input.streams.clone())?;
    let outcomes: Vec<PressOutcome> = results.iter().map(LocalizationResult::outcome).collect();
    let report = evaluate(&outcomes, None, &input.settings)?;
    Ok(Baseline { results, report })
}

/// Localizes pre-cropped streams without another copy.
pub fn localize(input: &SweepInput, streams: [EventStream; 2]) -> Result<Vec<LocalizationResult>> {
    let run = prepare_run_owned(streams, &input.schedule, input.origin_s, &input.params)?;
    Ok(run.trials.iter().map(|t| localize_trial(&run, t, &input.models, &input.params)).collect())
}

/// Evaluates one `(k, seed)` cell. With `per_k_reference` the pass threshold
/// is the cell's own p95 instead of `reference_p95_mm`.
pub fn sweep_cell(input: &SweepInput, reference_p95_mm: f64, per_k_reference: bool, k: u32, seed: u64) -> SweepCell {
    // segmentation only fails on invalid configuration, which the baseline
    // run has already ruled out
    let results = localize(input, input.thinned(k, seed)).unwrap_or_default();
    let outcomes: Vec<PressOutcome> = results.iter().map(LocalizationResult::outcome).collect();
    let sizes: Vec<f64> =
        results.iter().flat_map(|r| r.clusters.iter().map(|c| c.largest_cluster_size as f64)).collect();
    let mean_cluster_size = stats::mean(&sizes).unwrap_or(0.0);
    let reference = if per_k_reference { reference_p95(&outcomes) } else { Some(reference_p95_mm) };
    let report = reference.and_then(|p95| evaluate(&outcomes, Some(p95), &input.settings).ok());
    match report {
        Some(r) => SweepCell {
            k,
            seed,
            rmse_mm: Some(r.rmse_mm),
            pass_rate_percent: r.pass_rate_percent,
            n_valid: r.n_valid,
            report: Some(r),
            mean_cluster_size,
        },
        None => {
            SweepCell { k, seed, report: None, rmse_mm: None, pass_rate_percent: 0.0, mean_cluster_size, n_valid: 0 }
        }
    }
}

impl AblationSweep {
    /// Assembles a sweep from cells computed in any order.
    pub fn assemble(
        factors: &[u32],
        seeds: &[u64],
        baseline: &EvaluationReport,
        per_k_reference: bool,
        mut cells: Vec<SweepCell>,
    ) -> Self {
        let pos = |c: &SweepCell| {
            let i = factors.iter().position(|&k| k == c.k).unwrap_or(usize::MAX);
            let j = seeds.iter().position(|&s| s == c.seed).unwrap_or(usize::MAX);
            (i, j)
        };
        cells.sort_by_key(pos);
        let curve = factors
            .iter()
            .map(|&k| {
                let row: Vec<&SweepCell> = cells.iter().filter(|c| c.k == k).collect();
                let pass: Vec<f64> = row.iter().map(|c| c.pass_rate_percent).collect();
                let rmse: Vec<f64> = row.iter().filter_map(|c| c.rmse_mm).collect();
                let sizes: Vec<f64> = row.iter().map(|c| c.mean_cluster_size).collect();
                CurvePoint {
                    k,
                    pass_rate_mean: stats::mean(&pass).unwrap_or(0.0),
                    pass_rate_sd: stats::sample_sd(&pass).unwrap_or(0.0),
                    rmse_mean_mm: stats::mean(&rmse),
                    rmse_sd_mm: stats::sample_sd(&rmse),
                    mean_cluster_size: stats::mean(&sizes).unwrap_or(0.0),
                }
            })
            .collect();
        AblationSweep {
            factors: factors.to_vec(),
            seeds: seeds.to_vec(),
            reference_p95_mm: baseline.reference_p95_mm,
            per_k_reference,
            baseline: baseline.clone(),
            cells,
            curve,
        }
    }

    pub fn point(&self, k: u32) -> Option<&CurvePoint> {
        self.curve.iter().find(|p| p.k == k)
    }
}

/// Serial sweep over every `(k, seed)` pair.
pub fn run_sweep(input: &SweepInput, factors: &[u32], seeds: &[u64], per_k_reference: bool) -> Result<AblationSweep> {
    let base = baseline(input)?;
    let mut cells = Vec::with_capacity(factors.len() * seeds.len());
    for &k in factors {
        for &seed in seeds {
            cells.push(sweep_cell(input, base.report.reference_p95_mm, per_k_reference, k, seed));
        }
    }
    Ok(AblationSweep::assemble(factors, seeds, &base.report, per_k_reference, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{crop_roi, crop_roi_tracked, CameraId, Event, Polarity};

    fn stream(n: u64, camera: CameraId) -> EventStream {
        let events = (0..n)
            .map(|i| Event::new(i * 7, (i % 640) as u16, ((i * 31) % 480) as u16, Polarity::On).unwrap())
            .collect();
        EventStream::new(camera, events)
    }

    #[test]
    fn k_one_is_identity() {
        let s = stream(1000, CameraId::Cam1);
        assert_eq!(thin(&s, 1, 9), s);
    }

    #[test]
    fn thinning_is_reproducible_and_a_subsequence() {
        let s = stream(20_000, CameraId::Cam2);
        let a = thin(&s, 8, 3);
        assert_eq!(a, thin(&s, 8, 3));
        assert_ne!(a, thin(&s, 8, 4));
        let mut it = s.events().iter();
        for e in a.events() {
            assert!(it.any(|x| x == e));
        }
    }

    #[test]
    fn cameras_draw_independent_streams() {
        let a = thin(&stream(5000, CameraId::Cam1), 2, 1);
        let b = thin(&stream(5000, CameraId::Cam2), 2, 1);
        assert_ne!(a.events(), b.events());
    }

    #[test]
    fn ordinal_keying_matches_sequential() {
        let s = stream(5000, CameraId::Cam1);
        let ordinals: Vec<u32> = (0..s.len() as u32).collect();
        assert_eq!(thin_with_ordinals(&s, &ordinals, 16, 11), thin(&s, 16, 11));
    }

    #[test]
    fn commutes_with_crop() {
        let s = stream(30_000, CameraId::Cam1);
        let crop_then_thin = {
            let mut c = s.clone();
            let idx = crop_roi_tracked(&mut c, 200, 360).unwrap();
            thin_with_ordinals(&c, &idx, 4, 5)
        };
        let thin_then_crop = crop_roi(&thin(&s, 4, 5), 200, 360).unwrap();
        assert_eq!(crop_then_thin.events(), thin_then_crop.events());
    }

    #[test]
    fn retained_fraction_within_binomial_bound() {
        let n = 200_000u64;
        let s = stream(n, CameraId::Cam1);
        for k in [2u32, 4, 64] {
            let p = 1.0 / f64::from(k);
            let sd = libm::sqrt(n as f64 * p * (1.0 - p));
            let got = thin(&s, k, 42).len() as f64;
            assert!((got - n as f64 * p).abs() < 4.0 * sd, "k={k}: {got}");
        }
    }
}
