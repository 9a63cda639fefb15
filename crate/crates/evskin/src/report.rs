//! Report files: versioned JSON documents and flat CSV tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use evskin_core::ablate::AblationSweep;
use evskin_core::latency::{LatencyReport, RocPoint};
use evskin_core::pipeline::LocalizationResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, body: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &Versioned { schema_version: SCHEMA_VERSION, body })?;
    w.write_all(b"\n")?;
    w.flush()
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

#[derive(Serialize)]
struct LocalizationRow {
    sequence: usize,
    press_index: usize,
    repetition: usize,
    state: &'static str,
    gt_x_mm: f64,
    gt_y_mm: f64,
    est_x_mm: Option<f64>,
    est_y_mm: Option<f64>,
    error_mm: Option<f64>,
    out_of_bounds: Option<bool>,
    cam1_events: usize,
    cam2_events: usize,
    cam1_cluster_size: usize,
    cam2_cluster_size: usize,
    cam1_centroid_u: Option<f64>,
    cam2_centroid_u: Option<f64>,
    window_start_s: f64,
}

fn state_name(r: &LocalizationResult) -> &'static str {
    use evskin_core::pipeline::PressState::*;
    match r.state {
        Localized => "localized",
        Missing => "missing",
        Excluded => "excluded",
        Degenerate => "degenerate",
    }
}

pub fn write_localization_csv(path: &Path, results: &[LocalizationResult]) -> std::io::Result<()> {
    write_rows(
        path,
        results.iter().map(|r| LocalizationRow {
            sequence: r.sequence,
            press_index: r.press_index,
            repetition: r.repetition,
            state: state_name(r),
            gt_x_mm: r.ground_truth.0,
            gt_y_mm: r.ground_truth.1,
            est_x_mm: r.estimate().map(|e| e.0),
            est_y_mm: r.estimate().map(|e| e.1),
            error_mm: r.error_mm(),
            out_of_bounds: r.triangulation.map(|t| t.out_of_bounds),
            cam1_events: r.clusters[0].n_events,
            cam2_events: r.clusters[1].n_events,
            cam1_cluster_size: r.clusters[0].largest_cluster_size,
            cam2_cluster_size: r.clusters[1].largest_cluster_size,
            cam1_centroid_u: r.clusters[0].centroid.map(|c| c.0),
            cam2_centroid_u: r.clusters[1].centroid.map(|c| c.0),
            window_start_s: r.window.start,
        }),
    )
}

#[derive(Serialize)]
struct SweepRow {
    k: u32,
    seed: u64,
    rmse_mm: Option<f64>,
    pass_rate: f64,
    mean_cluster_size: f64,
}

#[derive(Serialize)]
struct CurveRow {
    k: u32,
    pass_rate_mean: f64,
    pass_rate_sd: f64,
    rmse_mean_mm: Option<f64>,
    rmse_sd_mm: Option<f64>,
    mean_cluster_size: f64,
}

pub fn write_sweep_csv(path: &Path, sweep: &AblationSweep) -> std::io::Result<()> {
    write_rows(
        path,
        sweep.cells.iter().map(|c| SweepRow {
            k: c.k,
            seed: c.seed,
            rmse_mm: c.rmse_mm,
            pass_rate: c.pass_rate_percent,
            mean_cluster_size: c.mean_cluster_size,
        }),
    )
}

pub fn write_curve_csv(path: &Path, sweep: &AblationSweep) -> std::io::Result<()> {
    write_rows(
        path,
        sweep.curve.iter().map(|p| CurveRow {
            k: p.k,
            pass_rate_mean: p.pass_rate_mean,
            pass_rate_sd: p.pass_rate_sd,
            rmse_mean_mm: p.rmse_mean_mm,
            rmse_sd_mm: p.rmse_sd_mm,
            mean_cluster_size: p.mean_cluster_size,
        }),
    )
}

#[derive(Serialize)]
struct RocRow {
    h: f64,
    tpr: f64,
    false_alarm_rate_per_s: f64,
}

pub fn write_roc_csv(path: &Path, roc: &[RocPoint]) -> std::io::Result<()> {
    write_rows(
        path,
        roc.iter().map(|p| RocRow {
            h: p.h,
            tpr: p.true_positive_rate,
            false_alarm_rate_per_s: p.false_alarm_rate_per_s,
        }),
    )
}

#[derive(Serialize)]
struct OnsetRow {
    sequence: usize,
    onset_ms: Option<f64>,
    centered_ms: Option<f64>,
    true_positive: bool,
}

pub fn write_onsets_csv(path: &Path, report: &LatencyReport, sequence: &[usize]) -> std::io::Result<()> {
    write_rows(
        path,
        report.onsets.iter().map(|o| OnsetRow {
            sequence: sequence.get(o.trial).copied().unwrap_or(o.trial),
            onset_ms: o.onset_s.map(|t| t * 1e3),
            centered_ms: o.centered_s.map(|t| t * 1e3),
            true_positive: o.true_positive,
        }),
    )
}

#[derive(Serialize)]
struct ResidualRow {
    sequence: usize,
    press_index: usize,
    x_mm: f64,
    y_mm: f64,
    residual_mm: Option<f64>,
}

/// Per-observation calibration residuals.
pub fn write_residuals_csv(path: &Path, rows: &[(usize, usize, f64, f64, Option<f64>)]) -> std::io::Result<()> {
    write_rows(
        path,
        rows.iter().map(|&(sequence, press_index, x_mm, y_mm, residual_mm)| ResidualRow {
            sequence,
            press_index,
            x_mm,
            y_mm,
            residual_mm,
        }),
    )
}
