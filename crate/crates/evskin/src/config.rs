//! JSON run configuration. Relative event-file paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use evskin_core::ablate::default_factors;
use evskin_core::calibrate::{FreeParams, LmSettings};
use evskin_core::geometry::CameraModel;
use evskin_core::latency::{default_h_grid, CusumParams};
use evskin_core::metrics::EvaluationSettings;
use evskin_core::pipeline::LocalizeParams;
use evskin_core::segment::{PressSchedule, ScheduleTiming};
use evskin_core::sync::SyncSpec;
use evskin_core::synth::SynthSpec;
use evskin_core::SensorLayout;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub free: FreeParams,
    pub lm: LmSettings,
    pub training_repetition: usize,
    /// Schedule sequence numbers left out of the fit.
    pub excluded_sequences: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub factors: Vec<u32>,
    /// Explicit thinning seeds; when empty, `n_seeds` seeds follow the run seed.
    pub seeds: Vec<u64>,
    pub n_seeds: usize,
    /// Judge each factor against its own p95 instead of the unthinned one.
    pub per_k_reference: bool,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig { factors: default_factors(), seeds: Vec::new(), n_seeds: 5, per_k_reference: false }
    }
}

impl AblationConfig {
    pub fn effective_seeds(&self, run_seed: u64) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.n_seeds as u64).map(|i| run_seed.wrapping_add(i)).collect()
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    pub cusum: CusumParams,
    /// Tune `h` on the data; otherwise `cusum.h` is used as given.
    pub tune: bool,
    pub h_grid: Vec<f64>,
    pub baseline_s: f64,
    /// Background snippets end this long before each press onset.
    pub background_gap_s: f64,
    /// Count only events inside the localization ROI.
    pub use_roi: bool,
    /// Thinning factor applied before detection (1 = none).
    pub thin_factor: u32,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig {
            cusum: CusumParams::default(),
            tune: true,
            h_grid: default_h_grid(),
            baseline_s: 0.3,
            background_gap_s: 1.0,
            use_roi: false,
            thin_factor: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cam1_events_path: PathBuf,
    pub cam2_events_path: PathBuf,
    pub layout: SensorLayout,
    pub timing: ScheduleTiming,
    /// Explicit schedule; derived from `layout` and `timing` when absent.
    pub schedule: Option<PressSchedule>,
    pub sync: SyncSpec,
    /// Initial (or previously calibrated) camera models.
    pub camera_models: [CameraModel; 2],
    pub seed: u64,
    pub localize: LocalizeParams,
    pub evaluation: EvaluationSettings,
    pub calibration: CalibrationConfig,
    pub ablation: AblationConfig,
    pub latency: LatencyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let layout = SensorLayout::default();
        RunConfig {
            cam1_events_path: PathBuf::from("cam1.csv"),
            cam2_events_path: PathBuf::from("cam2.csv"),
            camera_models: CameraModel::nominal_pair(layout.side_mm),
            layout,
            timing: ScheduleTiming::default(),
            schedule: None,
            sync: SyncSpec::default(),
            seed: 0,
            localize: LocalizeParams::default(),
            evaluation: EvaluationSettings::default(),
            calibration: CalibrationConfig::default(),
            ablation: AblationConfig::default(),
            latency: LatencyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn schedule(&self) -> PressSchedule {
        self.schedule.clone().unwrap_or_else(|| PressSchedule::from_layout(&self.layout, &self.timing))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: evskin_core::Error| ConfigError::Invalid(e.to_string());
        self.layout.validate().map_err(invalid)?;
        self.sync.validate().map_err(invalid)?;
        let schedule = self.schedule();
        schedule.validate().map_err(invalid)?;
        let expected = self.layout.grid_points.len() * self.layout.repetitions;
        if schedule.len() != expected {
            return Err(ConfigError::Invalid(format!(
                "schedule has {} presses but the layout implies {} ({} points x {} repetitions)",
                schedule.len(),
                expected,
                self.layout.grid_points.len(),
                self.layout.repetitions
            )));
        }
        for m in &self.camera_models {
            m.validate(self.layout.side_mm).map_err(invalid)?;
        }
        evskin_core::Roi::new(self.localize.roi.v_lo, self.localize.roi.v_hi).map_err(invalid)?;
        self.latency.cusum.validate().map_err(invalid)?;
        if self.ablation.factors.contains(&0) {
            return Err(ConfigError::Invalid("thinning factors must be >= 1".into()));
        }
        if self.latency.thin_factor == 0 {
            return Err(ConfigError::Invalid("latency.thin_factor must be >= 1".into()));
        }
        Ok(())
    }

    /// Makes relative event paths absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.cam1_events_path, &mut self.cam2_events_path] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
}

/// Loads and validates a run config.
pub fn load_run_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = read_json(path)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_synth_spec(path: &Path) -> Result<SynthSpec, ConfigError> {
    let spec: SynthSpec = read_json(path)?;
    spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(spec)
}

/// Camera models from either a bare `[model, model]` array or a calibration
/// report carrying a `models` field.
pub fn load_models(path: &Path) -> Result<[CameraModel; 2], ConfigError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Models {
        Bare([CameraModel; 2]),
        Report { models: [CameraModel; 2] },
    }
    Ok(match read_json::<Models>(path)? {
        Models::Bare(m) | Models::Report { models: m } => m,
    })
}
