//! Parallel drivers around the serial core stages. Work is split over
//! independent trials or sweep cells and collected in input order, so the
//! results never depend on the thread count.

use rayon::prelude::*;

use evskin_core::ablate::{self, AblationSweep, SweepInput};
use evskin_core::events::{crop_roi, CameraId, EventStream};
use evskin_core::geometry::CameraModel;
use evskin_core::latency::{snippet, CusumParams, LatencySnippet};
use evskin_core::metrics::{evaluate, PressOutcome};
use evskin_core::pipeline::{localize_trial, prepare_run, prepare_run_owned, LocalizationResult, LocalizeParams};
use evskin_core::segment::{PressSchedule, Window};
use evskin_core::sync::{sync_offset, SyncReport};

use crate::config::RunConfig;
use crate::ingest::{read_events, IngestError, LoadedEvents};

/// Reads both camera files concurrently.
pub fn load_streams(cfg: &RunConfig) -> Result<[LoadedEvents; 2], IngestError> {
    let (a, b) = rayon::join(
        || read_events(&cfg.cam1_events_path, CameraId::Cam1),
        || read_events(&cfg.cam2_events_path, CameraId::Cam2),
    );
    Ok([a?, b?])
}

pub struct AlignedRun {
    pub streams: [EventStream; 2],
    pub sync: SyncReport,
}

pub fn align(cfg: &RunConfig, loaded: [LoadedEvents; 2]) -> evskin_core::Result<AlignedRun> {
    let [a, b] = loaded;
    let sync = sync_offset(&a.stream, &b.stream, &cfg.sync)?;
    let mut s2 = b.stream;
    s2.time_offset_us += sync.offset_us;
    Ok(AlignedRun { streams: [a.stream, s2], sync })
}

/// [`evskin_core::pipeline::localize_run`] with trials spread over the pool.
pub fn localize(
    s1: &EventStream,
    s2: &EventStream,
    schedule: &PressSchedule,
    origin_s: f64,
    models: &[CameraModel; 2],
    params: &LocalizeParams,
) -> evskin_core::Result<Vec<LocalizationResult>> {
    let run = prepare_run(s1, s2, schedule, origin_s, params)?;
    Ok(run.trials.par_iter().map(|t| localize_trial(&run, t, models, params)).collect())
}

/// [`localize`] consuming the aligned streams to keep peak memory down.
pub fn localize_owned(
    streams: [EventStream; 2],
    schedule: &PressSchedule,
    origin_s: f64,
    models: &[CameraModel; 2],
    params: &LocalizeParams,
) -> evskin_core::Result<Vec<LocalizationResult>> {
    let run = prepare_run_owned(streams, schedule, origin_s, params)?;
    Ok(run.trials.par_iter().map(|t| localize_trial(&run, t, models, params)).collect())
}

pub fn outcomes(results: &[LocalizationResult]) -> Vec<PressOutcome> {
    results.iter().map(LocalizationResult::outcome).collect()
}

/// [`ablate::run_sweep`] with `(k, seed)` cells spread over the pool.
pub fn sweep(
    input: &SweepInput,
    factors: &[u32],
    seeds: &[u64],
    per_k_reference: bool,
) -> evskin_core::Result<AblationSweep> {
    let results = localize_owned(input.streams.clone(), &input.schedule, input.origin_s, &input.models, &input.params)?;
    let baseline = evaluate(&outcomes(&results), None, &input.settings)?;
    let pairs: Vec<(u32, u64)> = factors.iter().flat_map(|&k| seeds.iter().map(move |&s| (k, s))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(k, seed)| ablate::sweep_cell(input, baseline.reference_p95_mm, per_k_reference, k, seed))
        .collect();
    Ok(AblationSweep::assemble(factors, seeds, &baseline, per_k_reference, cells))
}

/// Detection and background snippets for every scheduled press.
pub struct LatencyInput {
    pub trials: Vec<LatencySnippet>,
    pub background: Vec<LatencySnippet>,
    /// Schedule position of each trial.
    pub sequence: Vec<usize>,
}

pub fn latency_input(
    streams: &[EventStream; 2],
    schedule: &PressSchedule,
    origin_s: f64,
    cfg: &RunConfig,
    params: &CusumParams,
) -> evskin_core::Result<LatencyInput> {
    let lc = &cfg.latency;
    let roi = cfg.localize.roi;
    let cropped;
    let streams = if lc.use_roi {
        cropped = [crop_roi(&streams[0], roi.v_lo, roi.v_hi)?, crop_roi(&streams[1], roi.v_lo, roi.v_hi)?];
        &cropped
    } else {
        streams
    };
    let thinned;
    let streams = if lc.thin_factor > 1 {
        thinned =
            [ablate::thin(&streams[0], lc.thin_factor, cfg.seed), ablate::thin(&streams[1], lc.thin_factor, cfg.seed)];
        &thinned
    } else {
        streams
    };
    let refs = [&streams[0], &streams[1]];
    let dur = schedule.press_duration_s;
    let pairs: Vec<evskin_core::Result<(LatencySnippet, LatencySnippet)>> = schedule
        .presses
        .par_iter()
        .map(|p| {
            let t0 = origin_s + p.onset_s;
            let press = snippet(
                &refs,
                Window { start: t0, end: t0 + dur },
                Window { start: t0 - lc.baseline_s, end: t0 },
                params,
            )?;
            let b1 = t0 - lc.background_gap_s;
            let b0 = b1 - dur;
            let background =
                snippet(&refs, Window { start: b0, end: b1 }, Window { start: b0 - lc.baseline_s, end: b0 }, params)?;
            Ok((press, background))
        })
        .collect();
    let mut input = LatencyInput { trials: Vec::new(), background: Vec::new(), sequence: Vec::new() };
    for (seq, pair) in pairs.into_iter().enumerate() {
        let (t, b) = pair?;
        input.trials.push(t);
        input.background.push(b);
        input.sequence.push(seq);
    }
    Ok(input)
}
