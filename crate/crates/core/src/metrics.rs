//! Localization accuracy and coverage statistics.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stats::{mean, percentile, sample_variance};

/// Euclidean and per-axis root-mean-square errors in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rmse {
    pub euclidean: f64,
    pub x: f64,
    pub y: f64,
}

pub fn rmse(estimates: &[(f64, f64)], ground_truths: &[(f64, f64)]) -> Result<Rmse> {
    if estimates.is_empty() {
        return Err(Error::UndefinedMetric("rmse of an empty set"));
    }
    if estimates.len() != ground_truths.len() {
        return Err(Error::UndefinedMetric("estimates and ground truths differ in length"));
    }
    let n = estimates.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (e, g) in estimates.iter().zip(ground_truths) {
        sx += (e.0 - g.0) * (e.0 - g.0);
        sy += (e.1 - g.1) * (e.1 - g.1);
    }
    Ok(Rmse { euclidean: libm::sqrt((sx + sy) / n), x: libm::sqrt(sx / n), y: libm::sqrt(sy / n) })
}

/// RMSE as a percentage of the sensor diagonal.
pub fn cmre(estimates: &[(f64, f64)], ground_truths: &[(f64, f64)], diagonal_mm: f64) -> Result<f64> {
    if !(diagonal_mm > 0.0) {
        return Err(Error::NonPositive("diagonal_mm"));
    }
    Ok(cmre_from_rmse(rmse(estimates, ground_truths)?.euclidean, diagonal_mm))
}

pub fn cmre_from_rmse(rmse_mm: f64, diagonal_mm: f64) -> f64 {
    100.0 * rmse_mm / diagonal_mm
}

/// Percentage of presses that are valid and closer than `reference_p95`.
/// Entries of `errors` for invalid presses are ignored.
pub fn pass_rate(errors: &[f64], reference_p95: f64, validity: &[bool]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let passes = errors.iter().zip(validity).filter(|(e, v)| **v && **e < reference_p95).count();
    100.0 * passes as f64 / errors.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TaxelConvention {
    /// Area divided by the disc of radius `rmse`.
    #[default]
    CircleArea,
    /// Area divided by the square of side `2 * rmse`.
    SquareTile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaxelCount {
    pub count: u64,
    pub convention: TaxelConvention,
}

pub fn effective_taxels(rmse_mm: f64, area_mm2: f64, convention: TaxelConvention) -> Result<TaxelCount> {
    if !(rmse_mm > 0.0) {
        return Err(Error::NonPositive("rmse_mm"));
    }
    let cell = match convention {
        TaxelConvention::CircleArea => PI * rmse_mm * rmse_mm,
        TaxelConvention::SquareTile => 4.0 * rmse_mm * rmse_mm,
    };
    // a hair of slack so that area == cell counts as exactly one taxel
    let count = libm::floor(area_mm2 / cell * (1.0 + 1e-12)) as u64;
    Ok(TaxelCount { count, convention })
}

/// Mean over presses of the 2D standard deviation `sqrt(var_x + var_y)`
/// of repeated estimates. Input pairs are `(press_index, estimate)`.
pub fn repeatability(estimates: &[(usize, (f64, f64))]) -> Result<f64> {
    let mut sorted: Vec<(usize, (f64, f64))> = estimates.to_vec();
    sorted.sort_by_key(|e| e.0);
    let mut sds = Vec::new();
    for group in sorted.chunk_by(|a, b| a.0 == b.0) {
        if group.len() < 2 {
            continue;
        }
        let xs: Vec<f64> = group.iter().map(|e| e.1 .0).collect();
        let ys: Vec<f64> = group.iter().map(|e| e.1 .1).collect();
        let var = sample_variance(&xs).unwrap_or(0.0) + sample_variance(&ys).unwrap_or(0.0);
        sds.push(libm::sqrt(var));
    }
    mean(&sds).ok_or(Error::UndefinedMetric("no press with two or more repetitions"))
}

/// Per-press localization outcome fed into [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PressOutcome {
    pub sequence: usize,
    pub press_index: usize,
    pub repetition: usize,
    pub ground_truth: (f64, f64),
    /// Present when both cameras produced a cluster and the rays intersect.
    pub estimate: Option<(f64, f64)>,
}

impl PressOutcome {
    pub fn error_mm(&self) -> Option<f64> {
        self.estimate.map(|e| libm::hypot(e.0 - self.ground_truth.0, e.1 - self.ground_truth.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EvaluationSettings {
    pub diagonal_mm: f64,
    pub full_area_mm2: f64,
    pub probed_area_mm2: f64,
    pub taxel_convention: TaxelConvention,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            diagonal_mm: 100.0 * core::f64::consts::SQRT_2,
            full_area_mm2: 10_000.0,
            probed_area_mm2: 4_000.0,
            taxel_convention: TaxelConvention::CircleArea,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PressError {
    pub sequence: usize,
    pub press_index: usize,
    pub repetition: usize,
    pub error_mm: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    pub n_presses: usize,
    pub n_valid: usize,
    pub rmse_mm: f64,
    pub rmse_x_mm: f64,
    pub rmse_y_mm: f64,
    pub mean_trial_std_mm: Option<f64>,
    pub cmre_percent: f64,
    pub reference_p95_mm: f64,
    pub pass_rate_percent: f64,
    pub effective_taxels_probed: Option<TaxelCount>,
    pub effective_taxels_full: Option<TaxelCount>,
    pub per_press_errors: Vec<PressError>,
}

/// 95th percentile of the valid press errors.
pub fn reference_p95(outcomes: &[PressOutcome]) -> Option<f64> {
    let errors: Vec<f64> = outcomes.iter().filter_map(PressOutcome::error_mm).collect();
    percentile(&errors, 95.0)
}

/// Full report. `reference_p95_mm = None` uses the outcomes' own p95.
pub fn evaluate(
    outcomes: &[PressOutcome],
    reference_p95_mm: Option<f64>,
    settings: &EvaluationSettings,
) -> Result<EvaluationReport> {
    let valid: Vec<&PressOutcome> = outcomes.iter().filter(|o| o.estimate.is_some()).collect();
    let est: Vec<(f64, f64)> = valid.iter().filter_map(|o| o.estimate).collect();
    let gt: Vec<(f64, f64)> = valid.iter().map(|o| o.ground_truth).collect();
    let r = rmse(&est, &gt)?;
    let p95 = match reference_p95_mm {
        Some(p) => p,
        None => reference_p95(outcomes).ok_or(Error::UndefinedMetric("no valid presses"))?,
    };
    let errors: Vec<f64> = outcomes.iter().map(|o| o.error_mm().unwrap_or(f64::INFINITY)).collect();
    let validity: Vec<bool> = outcomes.iter().map(|o| o.estimate.is_some()).collect();
    let per_press_errors = outcomes
        .iter()
        .zip(&errors)
        .map(|(o, &e)| PressError {
            sequence: o.sequence,
            press_index: o.press_index,
            repetition: o.repetition,
            error_mm: o.error_mm(),
            pass: o.estimate.is_some() && e < p95,
        })
        .collect();
    let grouped: Vec<(usize, (f64, f64))> = valid.iter().filter_map(|o| Some((o.press_index, o.estimate?))).collect();
    Ok(EvaluationReport {
        n_presses: outcomes.len(),
        n_valid: valid.len(),
        rmse_mm: r.euclidean,
        rmse_x_mm: r.x,
        rmse_y_mm: r.y,
        mean_trial_std_mm: repeatability(&grouped).ok(),
        cmre_percent: cmre_from_rmse(r.euclidean, settings.diagonal_mm),
        reference_p95_mm: p95,
        pass_rate_percent: pass_rate(&errors, p95, &validity),
        effective_taxels_probed: effective_taxels(r.euclidean, settings.probed_area_mm2, settings.taxel_convention)
            .ok(),
        effective_taxels_full: effective_taxels(r.euclidean, settings.full_area_mm2, settings.taxel_convention).ok(),
        per_press_errors,
    })
}
