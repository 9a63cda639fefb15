//! Press-wise localization: ROI crop, schedule segmentation, per-camera
//! DBSCAN centroids, exclusion and triangulation.

use alloc::vec::Vec;

use crate::calibrate::Observation;
use crate::cluster::{exclude_press, extract_centroid, ClusterResult, DbscanParams, PressStatus};
use crate::error::Result;
use crate::events::{crop_roi, crop_roi_in_place, EventStream, Roi};
use crate::geometry::{triangulate, CameraModel, Triangulation};
use crate::metrics::PressOutcome;
use crate::segment::{refine_onset, segment_by_schedule, PressSchedule, PressTrial, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LocalizeParams {
    pub roi: Roi,
    pub dbscan: DbscanParams,
    pub baseline_s: f64,
    /// Bin width for the optional onset refinement pass; `None` keeps the
    /// nominal schedule windows.
    pub refine_bin_s: Option<f64>,
}

impl Default for LocalizeParams {
    fn default() -> Self {
        LocalizeParams { roi: Roi::default(), dbscan: DbscanParams::default(), baseline_s: 0.3, refine_bin_s: None }
    }
}

/// What remains of a [`ClusterResult`] once per-event labels are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterSummary {
    pub n_events: usize,
    pub n_clusters: usize,
    pub largest_cluster_size: usize,
    pub centroid: Option<(f64, f64)>,
    pub valid: bool,
}

impl ClusterSummary {
    fn from_result(n_events: usize, r: &ClusterResult) -> Self {
        ClusterSummary {
            n_events,
            n_clusters: r.n_clusters,
            largest_cluster_size: r.largest_cluster_size,
            centroid: r.centroid,
            valid: r.valid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PressState {
    Localized,
    /// Onset outside the recording.
    Missing,
    /// At least one camera lacks a prominent cluster.
    Excluded,
    /// Both clusters found but the rays are near-parallel.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalizationResult {
    pub sequence: usize,
    pub press_index: usize,
    pub repetition: usize,
    pub window: Window,
    pub ground_truth: (f64, f64),
    pub clusters: [ClusterSummary; 2],
    pub status: PressStatus,
    pub state: PressState,
    pub triangulation: Option<Triangulation>,
}

impl LocalizationResult {
    pub fn estimate(&self) -> Option<(f64, f64)> {
        self.triangulation.map(|t| t.estimate)
    }

    pub fn error_mm(&self) -> Option<f64> {
        self.estimate().map(|e| libm::hypot(e.0 - self.ground_truth.0, e.1 - self.ground_truth.1))
    }

    pub fn outcome(&self) -> PressOutcome {
        PressOutcome {
            sequence: self.sequence,
            press_index: self.press_index,
            repetition: self.repetition,
            ground_truth: self.ground_truth,
            estimate: self.estimate(),
        }
    }

    /// Centroid columns usable for calibration.
    pub fn observation(&self) -> Option<Observation> {
        let u1 = self.clusters[0].centroid?.0;
        let u2 = self.clusters[1].centroid?.0;
        self.status.passed().then_some(Observation { u1, u2, x_mm: self.ground_truth.0, y_mm: self.ground_truth.1 })
    }
}

/// Cropped, segmented run ready for per-trial processing.
#[derive(Debug, Clone)]
pub struct SegmentedRun {
    pub streams: [EventStream; 2],
    pub trials: Vec<PressTrial>,
}

/// Crops both aligned streams and cuts them into trials.
pub fn prepare_run(
    s1: &EventStream,
    s2: &EventStream,
    schedule: &PressSchedule,
    origin_s: f64,
    params: &LocalizeParams,
) -> Result<SegmentedRun> {
    let c1 = crop_roi(s1, params.roi.v_lo, params.roi.v_hi)?;
    let c2 = crop_roi(s2, params.roi.v_lo, params.roi.v_hi)?;
    segment_cropped([c1, c2], schedule, origin_s, params)
}

/// [`prepare_run`] consuming the streams, so the full-frame events are
/// released as soon as they are cropped.
pub fn prepare_run_owned(
    streams: [EventStream; 2],
    schedule: &PressSchedule,
    origin_s: f64,
    params: &LocalizeParams,
) -> Result<SegmentedRun> {
    let [mut c1, mut c2] = streams;
    crop_roi_in_place(&mut c1, params.roi.v_lo, params.roi.v_hi)?;
    crop_roi_in_place(&mut c2, params.roi.v_lo, params.roi.v_hi)?;
    segment_cropped([c1, c2], schedule, origin_s, params)
}

fn segment_cropped(
    streams: [EventStream; 2],
    schedule: &PressSchedule,
    origin_s: f64,
    params: &LocalizeParams,
) -> Result<SegmentedRun> {
    let [c1, c2] = streams;
    let mut trials = segment_by_schedule(&c1, &c2, schedule, origin_s, params.baseline_s)?;
    if let Some(bin_s) = params.refine_bin_s {
        for t in &mut trials {
            if t.missing || t.event_count() == 0 {
                continue;
            }
            let t0 = refine_onset(t, &c1, &c2, bin_s);
            let shift = t0 - t.window.start;
            t.window = Window { start: t0, end: t.window.end + shift };
            t.events = [c1.index_range_s(t.window.start, t.window.end), c2.index_range_s(t.window.start, t.window.end)];
        }
    }
    Ok(SegmentedRun { streams: [c1, c2], trials })
}

/// Clusters and triangulates a single trial.
pub fn localize_trial(
    run: &SegmentedRun,
    trial: &PressTrial,
    models: &[CameraModel; 2],
    params: &LocalizeParams,
) -> LocalizationResult {
    let clusters = [0, 1].map(|c| {
        let events = &run.streams[c].events()[trial.events[c].clone()];
        let r = extract_centroid(events, &params.dbscan);
        ClusterSummary::from_result(events.len(), &r)
    });
    let status = if clusters[0].valid && clusters[1].valid {
        PressStatus::Pass
    } else {
        PressStatus::Fail { cam1: !clusters[0].valid, cam2: !clusters[1].valid }
    };
    let (state, triangulation) = if trial.missing {
        (PressState::Missing, None)
    } else if let (Some(c1), Some(c2)) = (clusters[0].centroid, clusters[1].centroid) {
        match triangulate(&models[0], c1.0, &models[1], c2.0) {
            Ok(t) => (PressState::Localized, Some(t)),
            Err(_) => (PressState::Degenerate, None),
        }
    } else {
        (PressState::Excluded, None)
    };
    LocalizationResult {
        sequence: trial.sequence,
        press_index: trial.press_index,
        repetition: trial.repetition,
        window: trial.window,
        ground_truth: trial.ground_truth,
        clusters,
        status: if trial.missing { PressStatus::Fail { cam1: true, cam2: true } } else { status },
        state,
        triangulation,
    }
}

/// Serial end-to-end localization of every scheduled press.
pub fn localize_run(
    s1: &EventStream,
    s2: &EventStream,
    schedule: &PressSchedule,
    origin_s: f64,
    models: &[CameraModel; 2],
    params: &LocalizeParams,
) -> Result<Vec<LocalizationResult>> {
    let run = prepare_run(s1, s2, schedule, origin_s, params)?;
    Ok(run.trials.iter().map(|t| localize_trial(&run, t, models, params)).collect())
}

/// Same rule as [`exclude_press`], applied to summaries.
pub fn summary_status(c: &[ClusterSummary; 2]) -> PressStatus {
    let as_result = |s: &ClusterSummary| ClusterResult {
        labels: Vec::new(),
        n_clusters: s.n_clusters,
        largest_cluster_size: s.largest_cluster_size,
        centroid: s.centroid,
        valid: s.valid,
    };
    exclude_press(&as_result(&c[0]), &as_result(&c[1]))
}
