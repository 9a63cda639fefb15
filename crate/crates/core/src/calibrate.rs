//! Least-squares refinement of the two camera models against ground-truth
//! press locations.
//!
//! Levenberg-Marquardt on the stacked (x, y) triangulation residuals with a
//! forward-difference Jacobian and Marquardt scaling `J^T J + lambda diag(J^T J)`.
//! Only cost-reducing steps are accepted, so the training cost never rises.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{triangulate, CameraModel};
use crate::stats::percentile;

/// One press seen by both cameras with its known location.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub u1: f64,
    pub u2: f64,
    pub x_mm: f64,
    pub y_mm: f64,
}

/// Which parameters of each camera the fit may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FreeParams {
    pub position: bool,
    pub skew: bool,
    pub k1: bool,
    pub focal: bool,
}

impl Default for FreeParams {
    fn default() -> Self {
        FreeParams { position: true, skew: true, k1: true, focal: false }
    }
}

impl FreeParams {
    fn per_camera(&self) -> usize {
        2 * usize::from(self.position) + usize::from(self.skew) + usize::from(self.k1) + usize::from(self.focal)
    }

    fn pack(&self, models: &[CameraModel; 2]) -> Vec<f64> {
        let mut p = Vec::with_capacity(2 * self.per_camera());
        for m in models {
            if self.position {
                p.push(m.x_mm);
                p.push(m.y_mm);
            }
            if self.skew {
                p.push(m.skew_rad);
            }
            if self.k1 {
                p.push(m.k1);
            }
            if self.focal {
                p.push(m.focal_px);
            }
        }
        p
    }

    fn unpack(&self, base: &[CameraModel; 2], p: &[f64]) -> [CameraModel; 2] {
        let mut out = *base;
        let mut it = p.iter().copied();
        for m in &mut out {
            if self.position {
                m.x_mm = it.next().unwrap_or(m.x_mm);
                m.y_mm = it.next().unwrap_or(m.y_mm);
            }
            if self.skew {
                m.skew_rad = it.next().unwrap_or(m.skew_rad);
            }
            if self.k1 {
                m.k1 = it.next().unwrap_or(m.k1);
            }
            if self.focal {
                m.focal_px = it.next().unwrap_or(m.focal_px);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub rel_tolerance: f64,
    pub initial_lambda: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Bound used when validating intermediate models.
    pub side_mm: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            max_iterations: 200,
            rel_tolerance: 1e-10,
            initial_lambda: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            side_mm: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualPercentiles {
    pub p50_mm: f64,
    pub p90_mm: f64,
    pub p95_mm: f64,
    pub max_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationReport {
    pub models: [CameraModel; 2],
    pub iterations: usize,
    pub converged: bool,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub initial_rmse_mm: f64,
    pub rmse_mm: f64,
    /// Per-observation error after the fit; `None` where the rays were degenerate.
    pub residuals_mm: Vec<Option<f64>>,
    pub n_degenerate: usize,
    pub percentiles: ResidualPercentiles,
}

/// Smallest usable training set.
pub const MIN_OBSERVATIONS: usize = 10;

struct Evaluation {
    residuals: Vec<f64>,
    cost: f64,
    used: usize,
}

fn evaluate(models: &[CameraModel; 2], obs: &[Observation]) -> Evaluation {
    let mut residuals = Vec::with_capacity(2 * obs.len());
    let mut used = 0;
    for o in obs {
        match triangulate(&models[0], o.u1, &models[1], o.u2) {
            Ok(t) => {
                residuals.push(t.estimate.0 - o.x_mm);
                residuals.push(t.estimate.1 - o.y_mm);
                used += 1;
            }
            // degenerate rays drop out of the cost
            Err(_) => residuals.extend([0.0, 0.0]),
        }
    }
    let cost = residuals.iter().map(|r| r * r).sum();
    Evaluation { residuals, cost, used }
}

fn rmse_of(e: &Evaluation) -> f64 {
    if e.used == 0 {
        return f64::NAN;
    }
    libm::sqrt(e.cost / e.used as f64)
}

/// Fits the free camera parameters to `observations`.
pub fn calibrate(
    initial: &[CameraModel; 2],
    observations: &[Observation],
    free: &FreeParams,
    settings: &LmSettings,
) -> Result<CalibrationReport> {
    if observations.len() < MIN_OBSERVATIONS {
        return Err(Error::Calibration(alloc::format!(
            "need at least {MIN_OBSERVATIONS} observations, got {}",
            observations.len()
        )));
    }
    let models_ok = |m: &[CameraModel; 2]| m.iter().all(|c| c.validate(settings.side_mm).is_ok());
    if !models_ok(initial) {
        return Err(Error::Calibration("initial camera models are invalid".to_string()));
    }

    let mut params = free.pack(initial);
    let n_params = params.len();
    let mut current = evaluate(initial, observations);
    if !current.cost.is_finite() {
        return Err(Error::Calibration("non-finite initial cost".to_string()));
    }
    let initial_cost = current.cost;
    let initial_rmse_mm = rmse_of(&current);

    let mut lambda = settings.initial_lambda;
    let mut iterations = 0;
    // already at the optimum to machine precision
    let mut converged = current.used > 0 && initial_rmse_mm < 1e-12;
    let mut models = *initial;

    while !converged && n_params > 0 && iterations < settings.max_iterations {
        iterations += 1;
        let m = current.residuals.len();
        let mut jac = DMatrix::<f64>::zeros(m, n_params);
        for j in 0..n_params {
            let h = libm::sqrt(f64::EPSILON) * params[j].abs().max(1.0);
            let mut shifted = params.clone();
            shifted[j] += h;
            let e = evaluate(&free.unpack(initial, &shifted), observations);
            for i in 0..m {
                jac[(i, j)] = (e.residuals[i] - current.residuals[i]) / h;
            }
        }
        let r = DVector::from_column_slice(&current.residuals);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * r;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n_params {
                let d = jtj[(k, k)];
                a[(k, k)] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let Some(delta) = a.lu().solve(&(-&grad)) else {
                lambda *= settings.lambda_up;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            let trial_models = free.unpack(initial, &trial);
            let e = if models_ok(&trial_models) {
                evaluate(&trial_models, observations)
            } else {
                Evaluation { residuals: Vec::new(), cost: f64::INFINITY, used: 0 }
            };
            if e.cost.is_nan() {
                return Err(Error::Calibration("non-finite cost during fit".to_string()));
            }
            if e.cost < current.cost {
                let rel = (current.cost - e.cost) / current.cost;
                params = trial;
                models = trial_models;
                current = e;
                lambda /= settings.lambda_down;
                accepted = true;
                if rel < settings.rel_tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= settings.lambda_up;
        }
        if !accepted {
            // no descent direction left at any damping
            converged = true;
        }
    }

    let residuals_mm: Vec<Option<f64>> = observations
        .iter()
        .map(|o| {
            triangulate(&models[0], o.u1, &models[1], o.u2)
                .ok()
                .map(|t| libm::hypot(t.estimate.0 - o.x_mm, t.estimate.1 - o.y_mm))
        })
        .collect();
    let finite: Vec<f64> = residuals_mm.iter().flatten().copied().collect();
    let pct = |q| percentile(&finite, q).unwrap_or(f64::NAN);
    let percentiles =
        ResidualPercentiles { p50_mm: pct(50.0), p90_mm: pct(90.0), p95_mm: pct(95.0), max_mm: pct(100.0) };

    Ok(CalibrationReport {
        models,
        iterations,
        converged,
        initial_cost,
        final_cost: current.cost,
        initial_rmse_mm,
        rmse_mm: rmse_of(&current),
        n_degenerate: observations.len() - current.used,
        residuals_mm,
        percentiles,
    })
}
