//! Cross-camera clock alignment from the synchronization taps at the start
//! of a recording.
//!
//! Each tap shows up as a short burst in both cameras. A tap onset is the
//! first 10 ms bin of a peak region whose count exceeds `onset_factor` times
//! the median bin count of the search window (the median is floored at one
//! event per bin so that a silent background does not turn every stray event
//! into a peak). Among all peak regions the chain of `n_taps` regions whose
//! consecutive spacing matches `tap_interval_s` (within `spacing_tolerance_s`)
//! and whose summed peak heights are largest is selected.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::events::EventStream;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SyncSpec {
    pub n_taps: usize,
    pub tap_interval_s: f64,
    pub post_pause_s: f64,
    pub search_window_s: f64,
    pub bin_s: f64,
    pub spacing_tolerance_s: f64,
    pub onset_factor: f64,
    /// Largest allowed per-tap disagreement after alignment.
    pub max_residual_s: f64,
}

impl Default for SyncSpec {
    fn default() -> Self {
        SyncSpec {
            n_taps: 3,
            tap_interval_s: 1.0,
            post_pause_s: 3.0,
            search_window_s: 15.0,
            bin_s: 0.01,
            spacing_tolerance_s: 0.25,
            onset_factor: 5.0,
            max_residual_s: 0.05,
        }
    }
}

impl SyncSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_taps < 2 {
            return Err(Error::Config(format!("n_taps must be >= 2, got {}", self.n_taps)));
        }
        for (name, v) in [
            ("tap_interval_s", self.tap_interval_s),
            ("search_window_s", self.search_window_s),
            ("bin_s", self.bin_s),
            ("onset_factor", self.onset_factor),
        ] {
            if !(v > 0.0) {
                return Err(Error::NonPositive(name));
            }
        }
        Ok(())
    }
}

/// A contiguous above-threshold region of the sync histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PeakRegion {
    onset_us: i64,
    peak: u32,
}

/// Outcome of aligning two camera streams.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncReport {
    /// Tap onsets of camera 1 in aligned seconds.
    pub taps_cam1_s: Vec<f64>,
    /// Tap onsets of camera 2 after alignment.
    pub taps_cam2_s: Vec<f64>,
    /// Offset added to camera 2 timestamps by this alignment.
    pub offset_us: i64,
}

impl SyncReport {
    /// Origin of the press schedule: the first tap of camera 1.
    pub fn origin_s(&self) -> f64 {
        self.taps_cam1_s[0]
    }
}

fn peak_regions(stream: &EventStream, spec: &SyncSpec) -> Vec<PeakRegion> {
    let Some((first, _)) = stream.extent_us() else {
        return Vec::new();
    };
    let bin_us = libm::round(spec.bin_s * 1e6).max(1.0) as i64;
    let n_bins = (libm::round(spec.search_window_s * 1e6) as i64 / bin_us).max(1) as usize;
    let mut counts = alloc::vec![0u32; n_bins];
    for e in stream.events() {
        let idx = ((stream.aligned_us(e) - first) / bin_us) as usize;
        if idx >= n_bins {
            break;
        }
        counts[idx] += 1;
    }

    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let median = crate::stats::percentile_sorted(&sorted.iter().map(|&c| f64::from(c)).collect::<Vec<_>>(), 50.0);
    let threshold = spec.onset_factor * median.max(1.0);

    let merge_gap_bins = (libm::round(0.25 * spec.tap_interval_s * 1e6) as i64 / bin_us).max(1) as usize;
    let mut regions: Vec<PeakRegion> = Vec::new();
    let mut last_above: Option<usize> = None;
    for (i, &c) in counts.iter().enumerate() {
        if f64::from(c) <= threshold {
            continue;
        }
        match (last_above, regions.last_mut()) {
            (Some(prev), Some(region)) if i - prev <= merge_gap_bins => region.peak = region.peak.max(c),
            _ => regions.push(PeakRegion { onset_us: first + i as i64 * bin_us, peak: c }),
        }
        last_above = Some(i);
    }
    regions
}

/// Onsets (aligned seconds) of the synchronization taps, sorted.
pub fn detect_sync_taps(stream: &EventStream, spec: &SyncSpec) -> Result<Vec<f64>> {
    Ok(detect_sync_taps_us(stream, spec)?.into_iter().map(|t| t as f64 * 1e-6).collect())
}

fn detect_sync_taps_us(stream: &EventStream, spec: &SyncSpec) -> Result<Vec<i64>> {
    spec.validate()?;
    let regions = peak_regions(stream, spec);
    let n = spec.n_taps;
    let lo = libm::round((spec.tap_interval_s - spec.spacing_tolerance_s) * 1e6) as i64;
    let hi = libm::round((spec.tap_interval_s + spec.spacing_tolerance_s) * 1e6) as i64;

    // best[len-1][i]: (score, predecessor) of the best chain of `len` regions ending at i
    let m = regions.len();
    let mut best: Vec<Vec<Option<(u64, usize)>>> = alloc::vec![alloc::vec![None; m]; n];
    for (i, r) in regions.iter().enumerate() {
        best[0][i] = Some((u64::from(r.peak), i));
    }
    for len in 1..n {
        for i in 0..m {
            let mut choice: Option<(u64, usize)> = None;
            for j in 0..i {
                let gap = regions[i].onset_us - regions[j].onset_us;
                if gap < lo || gap > hi {
                    continue;
                }
                if let Some((score, _)) = best[len - 1][j] {
                    let s = score + u64::from(regions[i].peak);
                    if choice.is_none_or(|(c, _)| s > c) {
                        choice = Some((s, j));
                    }
                }
            }
            best[len][i] = choice;
        }
    }

    let end =
        (0..m).filter_map(|i| best[n - 1][i].map(|(s, _)| (s, i))).fold(
            None::<(u64, usize)>,
            |acc, (s, i)| match acc {
                Some((a, _)) if a >= s => acc,
                _ => Some((s, i)),
            },
        );
    let Some((_, mut i)) = end else {
        return Err(Error::SyncFailure {
            camera: stream.camera,
            reason: format!("no {n} peaks spaced {} s apart", spec.tap_interval_s),
            candidates: regions.iter().map(|r| r.onset_us as f64 * 1e-6).collect(),
        });
    };
    let mut chain = alloc::vec![0i64; n];
    for len in (0..n).rev() {
        chain[len] = regions[i].onset_us;
        i = best[len][i].map(|(_, j)| j).unwrap_or(i);
    }
    Ok(chain)
}

/// Aligns camera 2 onto camera 1 so the mean tap onsets coincide.
pub fn align_streams(
    s1: &EventStream,
    s2: &EventStream,
    spec: &SyncSpec,
) -> Result<(EventStream, EventStream, SyncReport)> {
    let report = sync_offset(s1, s2, spec)?;
    let mut aligned2 = s2.clone();
    aligned2.time_offset_us += report.offset_us;
    Ok((s1.clone(), aligned2, report))
}

/// The offset to add to camera 2 timestamps, without copying the streams.
pub fn sync_offset(s1: &EventStream, s2: &EventStream, spec: &SyncSpec) -> Result<SyncReport> {
    let taps1 = detect_sync_taps_us(s1, spec)?;
    let taps2 = detect_sync_taps_us(s2, spec)?;
    let diff: i64 = taps1.iter().zip(&taps2).map(|(a, b)| a - b).sum();
    let offset_us = libm::round(diff as f64 / taps1.len() as f64) as i64;

    let max_res_us = libm::round(spec.max_residual_s * 1e6) as i64;
    let worst = taps1.iter().zip(&taps2).map(|(a, b)| (a - (b + offset_us)).abs()).max().unwrap_or(0);
    if worst >= max_res_us {
        return Err(Error::SyncFailure {
            camera: s2.camera,
            reason: format!("tap residual {} ms after alignment", worst as f64 * 1e-3),
            candidates: taps2.iter().map(|&t| t as f64 * 1e-6).collect(),
        });
    }

    Ok(SyncReport {
        taps_cam1_s: taps1.iter().map(|&t| t as f64 * 1e-6).collect(),
        taps_cam2_s: taps2.iter().map(|&t| (t + offset_us) as f64 * 1e-6).collect(),
        offset_us,
    })
}
