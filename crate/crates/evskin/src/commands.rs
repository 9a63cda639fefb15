//! Subcommand implementations. Each returns the report files it wrote or an
//! [`AppError`] that maps onto the process exit code.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use evskin_core::ablate::SweepInput;
use evskin_core::calibrate::{calibrate, CalibrationReport, Observation};
use evskin_core::geometry::CameraModel;
use evskin_core::latency::{latency_report, tune_threshold, CusumParams, RocPoint};
use evskin_core::metrics::{evaluate, EvaluationReport};
use evskin_core::pipeline::LocalizationResult;
use evskin_core::sync::SyncReport;
use evskin_core::synth::{generate_camera, SynthSpec, TruthManifest};
use evskin_core::{CameraId, EventStream};

use crate::config::{load_models, load_run_config, load_synth_spec, ConfigError, RunConfig};
use crate::ingest::{write_events, EventFormat, IngestError};
use crate::report::{self, write_json};
use crate::run;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Input(#[from] IngestError),
    #[error("{0}")]
    Sync(evskin_core::Error),
    #[error("no press produced a valid localization")]
    NoValidPresses,
    #[error("{0}")]
    Calibration(evskin_core::Error),
    #[error(transparent)]
    Core(evskin_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        use evskin_core::Error as E;
        match self {
            AppError::Config(_) | AppError::Input(_) => 2,
            AppError::Sync(_) => 3,
            AppError::NoValidPresses => 4,
            AppError::Calibration(_) => 5,
            AppError::Core(E::Config(_) | E::NonPositive(_) | E::InvalidRoi { .. } | E::PixelOutOfRange { .. }) => 2,
            AppError::Core(_) | AppError::Io { .. } => 1,
        }
    }
}

impl From<evskin_core::Error> for AppError {
    fn from(e: evskin_core::Error) -> Self {
        use evskin_core::Error as E;
        match e {
            E::SyncFailure { .. } => AppError::Sync(e),
            E::Calibration(_) => AppError::Calibration(e),
            other => AppError::Core(other),
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Debug, Default)]
pub struct CommandOutcome {
    pub reports: Vec<PathBuf>,
}

impl CommandOutcome {
    fn json<T: Serialize>(&mut self, dir: &Path, name: &str, body: &T) -> Result<(), AppError> {
        let path = dir.join(name);
        write_json(&path, body).map_err(|source| AppError::Io { path: path.clone(), source })?;
        self.reports.push(path);
        Ok(())
    }

    fn csv(
        &mut self,
        dir: &Path,
        name: &str,
        write: impl FnOnce(&Path) -> std::io::Result<()>,
    ) -> Result<(), AppError> {
        let path = dir.join(name);
        write(&path).map_err(|source| AppError::Io { path: path.clone(), source })?;
        self.reports.push(path);
        Ok(())
    }
}

fn prepare_out(dir: &Path) -> Result<(), AppError> {
    std::fs::create_dir_all(dir).map_err(|source| AppError::Io { path: dir.to_path_buf(), source })
}

fn run_config(common: &Common) -> Result<RunConfig, AppError> {
    let path = common.config.as_deref().ok_or_else(|| ConfigError::Invalid("this command needs --config".into()))?;
    let mut cfg = load_run_config(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    log::info!("effective seed {}", cfg.seed);
    Ok(cfg)
}

fn timed<T>(stage: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    log::info!("{stage}: {:.3} s", start.elapsed().as_secs_f64());
    out
}

/// Loads, aligns and localizes a run with the given models.
struct Localized {
    sync: SyncReport,
    results: Vec<LocalizationResult>,
}

fn load_and_localize(cfg: &RunConfig, models: &[CameraModel; 2]) -> Result<Localized, AppError> {
    let loaded = timed("read", || run::load_streams(cfg))?;
    log::info!("events: cam1 {} cam2 {}", loaded[0].stream.len(), loaded[1].stream.len());
    let aligned = timed("sync", || run::align(cfg, loaded))?;
    log::info!("camera 2 offset {} us", aligned.sync.offset_us);
    let origin_s = aligned.sync.origin_s();
    let results =
        timed("localize", || run::localize_owned(aligned.streams, &cfg.schedule(), origin_s, models, &cfg.localize))?;
    Ok(Localized { sync: aligned.sync, results })
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    seed: u64,
    event_format: EventFormat,
    events: [usize; 2],
    manifest: &'a TruthManifest,
}

/// Built-in synthesis settings used when no spec file is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Preset {
    /// Noise-free centroids: errors come only from pixel quantization.
    #[default]
    Ideal,
    /// Per-press centroid scatter, onset jitter and occasional reflections.
    Realistic,
}

pub fn simulate(common: &Common, format: EventFormat, preset: Preset) -> Result<CommandOutcome, AppError> {
    let mut spec = match (&common.config, preset) {
        (Some(p), _) => load_synth_spec(p)?,
        (None, Preset::Ideal) => SynthSpec::default(),
        (None, Preset::Realistic) => SynthSpec::realistic(),
    };
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    log::info!("effective seed {}", spec.seed);
    prepare_out(&common.out)?;
    let mut outcome = CommandOutcome::default();
    let names = [format!("cam1.{}", format.extension()), format!("cam2.{}", format.extension())];
    // one camera at a time so only one stream is ever held in memory
    let mut cams = Vec::with_capacity(2);
    for (camera, name) in CameraId::BOTH.into_iter().zip(&names) {
        let mut cam = timed("generate", || generate_camera(&spec, camera, false))?;
        let path = common.out.join(name);
        timed("write", || write_events(&cam.stream, &path, format))?;
        outcome.reports.push(path);
        log::info!("{camera}: {} events", cam.stream.len());
        cam.stream = EventStream::empty(camera);
        cams.push(cam);
    }
    let manifest = TruthManifest::assemble(&spec, [&cams[0], &cams[1]]);
    let events = [0, 1].map(|c| {
        cams[c].presses.iter().map(|p| p.events + p.secondary_events).sum::<usize>()
            + cams[c].tap_events
            + cams[c].background_events
            - cams[c].dropped_events
    });
    let summary = SimulateSummary { seed: spec.seed, event_format: format, events, manifest: &manifest };
    outcome.json(&common.out, "truth_manifest.json", &summary)?;
    let run_cfg = RunConfig {
        cam1_events_path: PathBuf::from(&names[0]),
        cam2_events_path: PathBuf::from(&names[1]),
        layout: spec.layout.clone(),
        timing: spec.timing,
        schedule: spec.schedule.clone(),
        sync: spec.sync.clone(),
        seed: spec.seed,
        ..RunConfig::default()
    };
    let path = common.out.join("run_config.json");
    let text =
        serde_json::to_string_pretty(&run_cfg).map_err(|e| AppError::Io { path: path.clone(), source: e.into() })?;
    std::fs::write(&path, text + "\n").map_err(|source| AppError::Io { path: path.clone(), source })?;
    outcome.reports.push(path);
    Ok(outcome)
}

#[derive(Serialize)]
struct LocalizeReport<'a> {
    seed: u64,
    sync: &'a SyncReport,
    camera_models: &'a [CameraModel; 2],
    evaluation: &'a EvaluationReport,
}

pub fn localize(common: &Common, models_path: Option<&Path>) -> Result<CommandOutcome, AppError> {
    let cfg = run_config(common)?;
    let models = match models_path {
        Some(p) => load_models(p)?,
        None => cfg.camera_models,
    };
    let run = load_and_localize(&cfg, &models)?;
    let outcomes = run::outcomes(&run.results);
    if outcomes.iter().all(|o| o.estimate.is_none()) {
        return Err(AppError::NoValidPresses);
    }
    let evaluation = evaluate(&outcomes, None, &cfg.evaluation)?;
    log::info!("valid {}/{}, rmse {:.4} mm", evaluation.n_valid, evaluation.n_presses, evaluation.rmse_mm);
    prepare_out(&common.out)?;
    let mut outcome = CommandOutcome::default();
    outcome.csv(&common.out, "localization.csv", |p| report::write_localization_csv(p, &run.results))?;
    let body = LocalizeReport { seed: cfg.seed, sync: &run.sync, camera_models: &models, evaluation: &evaluation };
    outcome.json(&common.out, "evaluation.json", &body)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct CalibrationOutput<'a> {
    seed: u64,
    training_repetition: usize,
    n_observations: usize,
    models: &'a [CameraModel; 2],
    initial_models: &'a [CameraModel; 2],
    fit: &'a CalibrationReport,
    /// Evaluation on the other repetitions with the fitted models.
    held_out: Option<&'a EvaluationReport>,
    /// Same presses with the initial models, for comparison.
    held_out_initial: Option<&'a EvaluationReport>,
}

pub fn calibrate_cmd(common: &Common) -> Result<CommandOutcome, AppError> {
    let cfg = run_config(common)?;
    let initial = cfg.camera_models;
    let run = load_and_localize(&cfg, &initial)?;
    let rep = cfg.calibration.training_repetition;
    let training: Vec<(&LocalizationResult, Observation)> = run
        .results
        .iter()
        .filter(|r| r.repetition == rep && !cfg.calibration.excluded_sequences.contains(&r.sequence))
        .filter_map(|r| Some((r, r.observation()?)))
        .collect();
    let observations: Vec<Observation> = training.iter().map(|(_, o)| *o).collect();
    log::info!("calibrating on {} presses of repetition {rep}", observations.len());
    let fit = timed("calibrate", || calibrate(&initial, &observations, &cfg.calibration.free, &cfg.calibration.lm))
        .map_err(AppError::Calibration)?;
    log::info!("training rmse {:.4} -> {:.4} mm in {} iterations", fit.initial_rmse_mm, fit.rmse_mm, fit.iterations);

    // held-out presses reuse the same centroids with the new models
    let held_out_with = |models: &[CameraModel; 2]| {
        let outcomes: Vec<_> = run
            .results
            .iter()
            .filter(|r| r.repetition != rep)
            .map(|r| {
                let mut o = r.outcome();
                o.estimate = r.observation().and_then(|ob| {
                    evskin_core::triangulate(&models[0], ob.u1, &models[1], ob.u2).ok().map(|t| t.estimate)
                });
                o
            })
            .collect();
        evaluate(&outcomes, None, &cfg.evaluation).ok()
    };
    let held_out = held_out_with(&fit.models);
    let held_out_initial = held_out_with(&initial);

    prepare_out(&common.out)?;
    let mut outcome = CommandOutcome::default();
    let body = CalibrationOutput {
        seed: cfg.seed,
        training_repetition: rep,
        n_observations: observations.len(),
        models: &fit.models,
        initial_models: &initial,
        fit: &fit,
        held_out: held_out.as_ref(),
        held_out_initial: held_out_initial.as_ref(),
    };
    outcome.json(&common.out, "calibrated_models.json", &body)?;
    let rows: Vec<_> = training
        .iter()
        .zip(&fit.residuals_mm)
        .map(|((r, o), res)| (r.sequence, r.press_index, o.x_mm, o.y_mm, *res))
        .collect();
    outcome.csv(&common.out, "calibration_residuals.csv", |p| report::write_residuals_csv(p, &rows))?;
    Ok(outcome)
}

pub struct AblateArgs<'a> {
    pub factors: Option<Vec<u32>>,
    pub seeds: Option<Vec<u64>>,
    pub per_k_reference: bool,
    pub models: Option<&'a Path>,
}

pub fn ablate(common: &Common, args: &AblateArgs<'_>) -> Result<CommandOutcome, AppError> {
    let cfg = run_config(common)?;
    let models = match args.models {
        Some(p) => load_models(p)?,
        None => cfg.camera_models,
    };
    let factors = args.factors.clone().unwrap_or_else(|| cfg.ablation.factors.clone());
    if factors.is_empty() || factors.contains(&0) {
        return Err(ConfigError::Invalid("factors must be a non-empty list of integers >= 1".into()).into());
    }
    let seeds = args.seeds.clone().unwrap_or_else(|| cfg.ablation.effective_seeds(cfg.seed));
    if seeds.is_empty() {
        return Err(ConfigError::Invalid("at least one thinning seed is needed".into()).into());
    }
    let per_k = args.per_k_reference || cfg.ablation.per_k_reference;
    let loaded = timed("read", || run::load_streams(&cfg))?;
    let aligned = run::align(&cfg, loaded)?;
    let origin_s = aligned.sync.origin_s();
    let input = SweepInput::new(aligned.streams, cfg.schedule(), origin_s, models, cfg.localize, cfg.evaluation)?;
    let sweep = timed("sweep", || run::sweep(&input, &factors, &seeds, per_k))?;
    for p in &sweep.curve {
        log::info!("k = {:>4}: pass {:.1} +- {:.1} %", p.k, p.pass_rate_mean, p.pass_rate_sd);
    }
    prepare_out(&common.out)?;
    let mut outcome = CommandOutcome::default();
    outcome.csv(&common.out, "sweep.csv", |p| report::write_sweep_csv(p, &sweep))?;
    outcome.csv(&common.out, "sweep_curve.csv", |p| report::write_curve_csv(p, &sweep))?;
    outcome.json(&common.out, "ablation.json", &sweep)?;
    Ok(outcome)
}

pub struct LatencyArgs {
    pub h: Option<f64>,
    pub tune: bool,
}

#[derive(Serialize)]
struct LatencyOutput<'a> {
    seed: u64,
    tuned: bool,
    thin_factor: u32,
    params: &'a CusumParams,
    report: &'a evskin_core::latency::LatencyReport,
}

pub fn latency(common: &Common, args: &LatencyArgs) -> Result<CommandOutcome, AppError> {
    let cfg = run_config(common)?;
    let loaded = timed("read", || run::load_streams(&cfg))?;
    let aligned = run::align(&cfg, loaded)?;
    let params = cfg.latency.cusum;
    let input = timed("snippets", || {
        run::latency_input(&aligned.streams, &cfg.schedule(), aligned.sync.origin_s(), &cfg, &params)
    })?;
    let tune = args.h.is_none() && (args.tune || cfg.latency.tune);
    let mut roc: Option<Vec<RocPoint>> = None;
    let h = match args.h {
        Some(h) => h,
        None if tune => {
            let t = timed("tune", || tune_threshold(&input.trials, &input.background, &params, &cfg.latency.h_grid))?;
            log::info!("tuned h = {:.4}", t.h);
            roc = Some(t.roc);
            t.h
        }
        None => params.h,
    };
    let rep = latency_report(&input.trials, &input.background, h, &params)?;
    log::info!(
        "tpr {:.3}, width {:.2} ms, false alarms {:.4}/s",
        rep.true_positive_rate,
        rep.latency_width_ms,
        rep.false_alarm_rate_per_s
    );
    prepare_out(&common.out)?;
    let mut outcome = CommandOutcome::default();
    let body = LatencyOutput {
        seed: cfg.seed,
        tuned: roc.is_some(),
        thin_factor: cfg.latency.thin_factor,
        params: &params,
        report: &rep,
    };
    outcome.json(&common.out, "latency.json", &body)?;
    outcome.csv(&common.out, "onsets.csv", |p| report::write_onsets_csv(p, &rep, &input.sequence))?;
    if let Some(roc) = &roc {
        outcome.csv(&common.out, "roc.csv", |p| report::write_roc_csv(p, roc))?;
    }
    Ok(outcome)
}
