use alloc::string::String;
use alloc::vec::Vec;

use crate::events::CameraId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("pixel ({u}, {v}) outside the 640x480 sensor")]
    PixelOutOfRange { u: u16, v: u16 },
    #[error("invalid ROI band [{v_lo}, {v_hi}]")]
    InvalidRoi { v_lo: u16, v_hi: u16 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sync failure on {camera}: {reason}; candidate onsets {candidates:?}")]
    SyncFailure { camera: CameraId, reason: String, candidates: Vec<f64> },
    #[error("near-parallel rays (|sin| = {condition:e})")]
    DegenerateGeometry { condition: f64 },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("threshold tuning failed: best TPR {best_tpr:.3} at h = {best_h}")]
    Tuning { best_tpr: f64, best_h: f64 },
}
