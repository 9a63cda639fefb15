//! Synthetic dual-camera recordings: sync taps, press bursts forward-projected
//! through ground-truth camera models, and full-frame background noise.
//!
//! All randomness comes from ChaCha8 substreams keyed by `(seed, source,
//! camera, index)`, so every press is generated independently of the others
//! and the output depends only on the spec.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::events::{CameraId, Event, EventStream, Polarity, Roi, SensorLayout, SENSOR_HEIGHT, SENSOR_WIDTH};
use crate::geometry::{project_point, CameraModel};
use crate::segment::{PressSchedule, ScheduleTiming};
use crate::sync::SyncSpec;

/// Temporal envelope of a burst: linear rise, flat plateau, linear fall, as
/// fractions of the burst duration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateProfile {
    pub rise: f64,
    pub plateau: f64,
    pub fall: f64,
}

impl Default for RateProfile {
    fn default() -> Self {
        RateProfile { rise: 0.2, plateau: 0.5, fall: 0.3 }
    }
}

impl RateProfile {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.rise, self.plateau, self.fall];
        if parts.iter().any(|p| !(*p >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("rate profile fractions must be non-negative and sum to 1".into()));
        }
        Ok(())
    }

    /// Maps a uniform draw to a position in `[0, 1]` distributed as the
    /// envelope, with the phase it falls in.
    pub fn sample(&self, x: f64) -> (f64, Phase) {
        let (r, p, f) = (self.rise, self.plateau, self.fall);
        let a = x * (0.5 * r + p + 0.5 * f);
        if a < 0.5 * r {
            (libm::sqrt(2.0 * a * r), Phase::Rise)
        } else if a < 0.5 * r + p {
            (r + a - 0.5 * r, Phase::Plateau)
        } else {
            let b = (a - 0.5 * r - p).min(0.5 * f);
            let tau = f - libm::sqrt((f * f - 2.0 * f * b).max(0.0));
            (r + p + tau, Phase::Fall)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Rise,
    Plateau,
    Fall,
}

/// Row distribution of burst events.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum VProfile {
    /// Uniform over the burst ROI band.
    #[default]
    Uniform,
    /// Rounded normal, clamped to the band.
    Gaussian { center_px: f64, sigma_px: f64 },
}

/// Optional second, weaker blob per press and camera (e.g. a reflection),
/// displaced from the main burst by a uniform distance in
/// `[min_offset_px, max_offset_px)` to either side.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SecondaryBlob {
    pub probability: f64,
    /// Mean event count relative to the main burst.
    pub weight: f64,
    pub sigma_u_px: f64,
    pub min_offset_px: f64,
    pub max_offset_px: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TapSpec {
    pub enabled: bool,
    pub events_per_tap_per_camera: f64,
    pub duration_s: f64,
    pub profile: RateProfile,
}

impl Default for TapSpec {
    fn default() -> Self {
        TapSpec {
            enabled: true,
            events_per_tap_per_camera: 20_000.0,
            duration_s: 0.25,
            profile: RateProfile { rise: 0.1, plateau: 0.2, fall: 0.7 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SynthSpec {
    pub layout: SensorLayout,
    /// Ground-truth camera models.
    pub models: [CameraModel; 2],
    pub timing: ScheduleTiming,
    /// Explicit schedule; derived from `layout` and `timing` when absent.
    pub schedule: Option<PressSchedule>,
    pub sync: SyncSpec,
    pub taps: TapSpec,
    /// Background-only time before the first tap.
    pub lead_in_s: f64,
    /// Background-only time after the last press.
    pub tail_s: f64,
    pub burst_events_per_press_per_camera: f64,
    pub sigma_u_px: f64,
    pub rate_profile: RateProfile,
    pub v_profile: VProfile,
    /// Rows populated by press and tap bursts.
    pub burst_roi: Roi,
    /// Full-frame background rate per camera.
    pub background_rate_per_camera: f64,
    /// Camera 2 timestamps are `true_time - offset`.
    pub cam2_clock_offset_s: f64,
    /// Each press starts late by a uniform draw from `[0, onset_jitter_s)`.
    pub onset_jitter_s: f64,
    /// Per-press, per-camera normal shift of the burst column.
    pub centroid_jitter_px: f64,
    pub secondary: Option<SecondaryBlob>,
    /// Burst counts scale as `(d_center / d)^exponent` with camera distance.
    pub count_distance_exponent: f64,
    /// Stratified quantization offsets instead of plain rounding.
    pub dither: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let layout = SensorLayout::default();
        let models = CameraModel::nominal_pair(layout.side_mm);
        SynthSpec {
            layout,
            models,
            timing: ScheduleTiming::default(),
            schedule: None,
            sync: SyncSpec::default(),
            taps: TapSpec::default(),
            lead_in_s: 1.0,
            tail_s: 1.0,
            burst_events_per_press_per_camera: 15_000.0,
            sigma_u_px: 3.0,
            rate_profile: RateProfile::default(),
            v_profile: VProfile::Uniform,
            burst_roi: Roi::default(),
            background_rate_per_camera: 4_550.0,
            cam2_clock_offset_s: 0.0,
            onset_jitter_s: 0.0,
            centroid_jitter_px: 0.0,
            secondary: None,
            count_distance_exponent: 0.0,
            dither: true,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Compact bursts with per-press centroid scatter (about 4.5 mm RMSE with
    /// true models) and occasional reflections that only win the dominant
    /// cluster once few events are left.
    pub fn realistic() -> Self {
        SynthSpec {
            burst_events_per_press_per_camera: 20_000.0,
            v_profile: VProfile::Gaussian { center_px: 280.0, sigma_px: 2.0 },
            centroid_jitter_px: 14.0,
            onset_jitter_s: 0.03,
            secondary: Some(SecondaryBlob {
                probability: 0.2,
                weight: 0.8,
                sigma_u_px: 3.0,
                min_offset_px: 90.0,
                max_offset_px: 160.0,
            }),
            ..SynthSpec::default()
        }
    }

    pub fn schedule(&self) -> PressSchedule {
        self.schedule.clone().unwrap_or_else(|| PressSchedule::from_layout(&self.layout, &self.timing))
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.sync.validate()?;
        self.schedule().validate()?;
        self.rate_profile.validate()?;
        self.taps.profile.validate()?;
        for m in &self.models {
            m.validate(self.layout.side_mm)?;
        }
        let non_negative = [
            ("burst_events_per_press_per_camera", self.burst_events_per_press_per_camera),
            ("sigma_u_px", self.sigma_u_px),
            ("background_rate_per_camera", self.background_rate_per_camera),
            ("onset_jitter_s", self.onset_jitter_s),
            ("centroid_jitter_px", self.centroid_jitter_px),
            ("lead_in_s", self.lead_in_s),
            ("tail_s", self.tail_s),
            ("taps.events_per_tap_per_camera", self.taps.events_per_tap_per_camera),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(alloc::format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.taps.enabled && !(self.taps.duration_s > 0.0) {
            return Err(Error::NonPositive("taps.duration_s"));
        }
        if let VProfile::Gaussian { sigma_px, .. } = self.v_profile {
            if !(sigma_px >= 0.0) {
                return Err(Error::Config("v sigma must be non-negative".into()));
            }
        }
        if let Some(s) = self.secondary {
            if !(0.0..=1.0).contains(&s.probability) || !(s.weight >= 0.0) || !(s.sigma_u_px >= 0.0) {
                return Err(Error::Config(
                    "secondary blob needs probability in [0, 1] and non-negative weight and spread".into(),
                ));
            }
            if !(s.min_offset_px >= 0.0 && s.max_offset_px >= s.min_offset_px) {
                return Err(Error::Config("secondary blob offsets must satisfy 0 <= min <= max".into()));
            }
        }
        if !self.cam2_clock_offset_s.is_finite() || !self.count_distance_exponent.is_finite() {
            return Err(Error::Config("offset and count exponent must be finite".into()));
        }
        Ok(())
    }

    /// True (camera 1 clock) time of the first tap.
    pub fn origin_s(&self) -> f64 {
        self.lead_in_s
    }

    pub fn duration_s(&self) -> f64 {
        self.lead_in_s + self.schedule().end_s() + self.tail_s
    }
}

/// Which process generated an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Source {
    Background,
    Tap(u32),
    Press(u32),
    Secondary(u32),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PressTruth {
    pub sequence: usize,
    pub press_index: usize,
    pub repetition: usize,
    pub x_mm: f64,
    pub y_mm: f64,
    /// True onset on the camera 1 clock, jitter included.
    pub onset_s: f64,
    /// Noise-free projected column; `None` when out of view.
    pub u_star: [Option<f64>; 2],
    /// Column the burst was actually centred on after jitter.
    pub u_burst: [Option<f64>; 2],
    pub events: [usize; 2],
    pub secondary_u: [Option<f64>; 2],
    pub secondary_events: [usize; 2],
    pub in_view: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruthManifest {
    pub seed: u64,
    pub duration_s: f64,
    pub origin_s: f64,
    pub cam2_clock_offset_us: i64,
    pub taps_s: Vec<f64>,
    pub tap_events: [usize; 2],
    pub background_events: [usize; 2],
    /// Events dropped because the camera 2 clock would be negative.
    pub dropped_events: [usize; 2],
    pub presses: Vec<PressTruth>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub streams: [EventStream; 2],
    /// Per-event source, parallel to each stream's events.
    pub labels: [Vec<Source>; 2],
    pub manifest: TruthManifest,
}

const SOURCE_PRESS: u64 = 1;
const SOURCE_TAP: u64 = 2;
const SOURCE_BACKGROUND: u64 = 3;
const SOURCE_PRESS_SHARED: u64 = 4;

fn substream(seed: u64, source: u64, camera: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((source << 56) | (camera << 48) | (index & 0xFFFF_FFFF_FFFF));
    rng
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as usize,
        Err(_) => 0,
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

struct Burst<'a> {
    spec: &'a SynthSpec,
    u_center: f64,
    sigma_u: f64,
    start_s: f64,
    duration_s: f64,
    profile: RateProfile,
}

impl Burst<'_> {
    fn emit(&self, rng: &mut ChaCha8Rng, n: usize, source: Source, out: &mut Sink) {
        let roi = self.spec.burst_roi;
        let (v_lo, v_hi) = (f64::from(roi.v_lo), f64::from(roi.v_hi.min(SENSOR_HEIGHT - 1)));
        let u_max = f64::from(SENSOR_WIDTH - 1);
        for i in 0..n {
            let x = self.u_center + self.sigma_u * normal(rng);
            let offset = if self.spec.dither { (i as f64 + 0.5) / n as f64 } else { 0.5 };
            let u = libm::floor(x + offset).clamp(0.0, u_max) as u16;
            let v = match self.spec.v_profile {
                VProfile::Uniform => rng.random_range(roi.v_lo..=roi.v_hi.min(SENSOR_HEIGHT - 1)),
                VProfile::Gaussian { center_px, sigma_px } => {
                    libm::round(center_px + sigma_px * normal(rng)).clamp(v_lo, v_hi) as u16
                }
            };
            let (frac, phase) = self.profile.sample(rng.random::<f64>());
            let polarity = match phase {
                Phase::Rise => Polarity::On,
                Phase::Fall => Polarity::Off,
                Phase::Plateau => {
                    if rng.random::<bool>() {
                        Polarity::On
                    } else {
                        Polarity::Off
                    }
                }
            };
            let t = self.start_s + frac * self.duration_s;
            out.push(t, Event { t_us: 0, u, v, polarity }, source);
        }
    }
}

fn tap_times(spec: &SynthSpec) -> Vec<f64> {
    (0..spec.sync.n_taps).map(|i| spec.origin_s() + i as f64 * spec.sync.tap_interval_s).collect()
}

fn skin_center(spec: &SynthSpec) -> (f64, f64) {
    (0.5 * spec.layout.side_mm, 0.5 * spec.layout.side_mm)
}

fn taps_raw(spec: &SynthSpec, camera: usize, out: &mut Sink) {
    if !spec.taps.enabled {
        return;
    }
    let Some(u_center) = project_point(&spec.models[camera], skin_center(spec)).in_view() else {
        return;
    };
    for (i, &t) in tap_times(spec).iter().enumerate() {
        let mut rng = substream(spec.seed, SOURCE_TAP, camera as u64, i as u64);
        let n = poisson(&mut rng, spec.taps.events_per_tap_per_camera);
        let burst = Burst {
            spec,
            u_center,
            sigma_u: spec.sigma_u_px,
            start_s: t,
            duration_s: spec.taps.duration_s,
            profile: spec.taps.profile,
        };
        burst.emit(&mut rng, n, Source::Tap(i as u32), out);
    }
}

fn background_raw(spec: &SynthSpec, camera: usize, duration_s: f64, out: &mut Sink) {
    let mut rng = substream(spec.seed, SOURCE_BACKGROUND, camera as u64, 0);
    let n = poisson(&mut rng, spec.background_rate_per_camera * duration_s);
    for _ in 0..n {
        let t = rng.random::<f64>() * duration_s;
        let u = rng.random_range(0..SENSOR_WIDTH);
        let v = rng.random_range(0..SENSOR_HEIGHT);
        let polarity = if rng.random::<bool>() { Polarity::On } else { Polarity::Off };
        out.push(t, Event { t_us: 0, u, v, polarity }, Source::Background);
    }
}

/// Collects events on a camera clock, dropping those that would land before
/// its zero.
struct Sink {
    offset_s: f64,
    events: Vec<Event>,
    labels: Option<Vec<Source>>,
    dropped: usize,
}

impl Sink {
    fn new(offset_s: f64, capacity: usize, with_labels: bool) -> Self {
        Sink {
            offset_s,
            events: Vec::with_capacity(capacity),
            labels: with_labels.then(|| Vec::with_capacity(capacity)),
            dropped: 0,
        }
    }

    fn push(&mut self, t_true_s: f64, mut e: Event, source: Source) {
        let t_cam = libm::round((t_true_s - self.offset_s) * 1e6);
        if t_cam < 0.0 {
            self.dropped += 1;
            return;
        }
        e.t_us = t_cam as u64;
        self.events.push(e);
        if let Some(l) = &mut self.labels {
            l.push(source);
        }
    }

    /// Stable time sort, carrying labels along.
    fn finish(self) -> (Vec<Event>, Option<Vec<Source>>, usize) {
        let Sink { events, labels, dropped, .. } = self;
        match labels {
            None => {
                let mut events = events;
                events.sort_by_key(|e| e.t_us);
                (events, None, dropped)
            }
            Some(labels) => {
                let mut pairs: Vec<(Event, Source)> = events.into_iter().zip(labels).collect();
                pairs.sort_by_key(|(e, _)| e.t_us);
                let (events, labels) = pairs.into_iter().unzip();
                (events, Some(labels), dropped)
            }
        }
    }
}

fn clock_offset_s(spec: &SynthSpec, camera: usize) -> f64 {
    if camera == 0 {
        0.0
    } else {
        spec.cam2_clock_offset_s
    }
}

/// Sync-tap events of both cameras on their own clocks.
pub fn generate_sync_taps(spec: &SynthSpec) -> Result<[Vec<Event>; 2]> {
    spec.validate()?;
    Ok([0, 1].map(|c| {
        let mut sink = Sink::new(clock_offset_s(spec, c), 0, false);
        taps_raw(spec, c, &mut sink);
        sink.finish().0
    }))
}

/// What one camera saw of one press.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPressTruth {
    pub onset_s: f64,
    pub u_star: Option<f64>,
    pub u_burst: Option<f64>,
    pub events: usize,
    pub secondary_u: Option<f64>,
    pub secondary_events: usize,
}

/// One camera's stream with its share of the ground truth.
#[derive(Debug, Clone)]
pub struct CameraOutput {
    pub stream: EventStream,
    /// Per-event source when requested.
    pub labels: Option<Vec<Source>>,
    pub presses: Vec<CameraPressTruth>,
    pub tap_events: usize,
    pub background_events: usize,
    pub dropped_events: usize,
}

fn expected_events(spec: &SynthSpec, n_presses: usize, duration_s: f64) -> usize {
    let secondary = spec.secondary.map_or(0.0, |s| s.probability * s.weight);
    let bursts = n_presses as f64 * spec.burst_events_per_press_per_camera * (1.0 + secondary);
    let taps = if spec.taps.enabled { spec.sync.n_taps as f64 * spec.taps.events_per_tap_per_camera } else { 0.0 };
    let mean = bursts + taps + spec.background_rate_per_camera * duration_s;
    // a few Poisson standard deviations of headroom
    (mean + 6.0 * libm::sqrt(mean) + 1024.0) as usize
}

/// Generates a single camera's stream. Memory use is one event (plus one
/// label if requested) per generated event.
pub fn generate_camera(spec: &SynthSpec, camera: CameraId, with_labels: bool) -> Result<CameraOutput> {
    spec.validate()?;
    let c = camera.index();
    let schedule = spec.schedule();
    let duration_s = spec.duration_s();
    let center = skin_center(spec);
    let model = &spec.models[c];
    let mut sink = Sink::new(clock_offset_s(spec, c), expected_events(spec, schedule.len(), duration_s), with_labels);
    let mut presses = Vec::with_capacity(schedule.len());

    for (seq, p) in schedule.presses.iter().enumerate() {
        let mut shared = substream(spec.seed, SOURCE_PRESS_SHARED, 0, seq as u64);
        let jitter = if spec.onset_jitter_s > 0.0 { shared.random::<f64>() * spec.onset_jitter_s } else { 0.0 };
        let onset = spec.origin_s() + p.onset_s + jitter;
        let mut truth = CameraPressTruth {
            onset_s: onset,
            u_star: None,
            u_burst: None,
            events: 0,
            secondary_u: None,
            secondary_events: 0,
        };
        let Some(u_star) = project_point(model, (p.x_mm, p.y_mm)).in_view() else {
            presses.push(truth);
            continue;
        };
        let mut rng = substream(spec.seed, SOURCE_PRESS, c as u64, seq as u64);
        let u_center =
            u_star + if spec.centroid_jitter_px > 0.0 { spec.centroid_jitter_px * normal(&mut rng) } else { 0.0 };
        let scale = if spec.count_distance_exponent != 0.0 {
            libm::pow(model.distance_to(center) / model.distance_to((p.x_mm, p.y_mm)), spec.count_distance_exponent)
        } else {
            1.0
        };
        let mean = spec.burst_events_per_press_per_camera * scale;
        let n = poisson(&mut rng, mean);
        let burst = Burst {
            spec,
            u_center,
            sigma_u: spec.sigma_u_px,
            start_s: onset,
            duration_s: schedule.press_duration_s,
            profile: spec.rate_profile,
        };
        burst.emit(&mut rng, n, Source::Press(seq as u32), &mut sink);
        truth.u_star = Some(u_star);
        truth.u_burst = Some(u_center);
        truth.events = n;

        if let Some(sec) = spec.secondary {
            if rng.random::<f64>() < sec.probability {
                let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let u = u_center
                    + side * (sec.min_offset_px + rng.random::<f64>() * (sec.max_offset_px - sec.min_offset_px));
                let n = poisson(&mut rng, mean * sec.weight);
                let blob = Burst { u_center: u, sigma_u: sec.sigma_u_px, ..burst };
                blob.emit(&mut rng, n, Source::Secondary(seq as u32), &mut sink);
                truth.secondary_u = Some(u);
                truth.secondary_events = n;
            }
        }
        presses.push(truth);
    }

    let before = sink.events.len() + sink.dropped;
    taps_raw(spec, c, &mut sink);
    let tap_events = sink.events.len() + sink.dropped - before;
    let before = sink.events.len() + sink.dropped;
    background_raw(spec, c, duration_s, &mut sink);
    let background_events = sink.events.len() + sink.dropped - before;
    let (events, labels, dropped_events) = sink.finish();
    Ok(CameraOutput {
        stream: EventStream::new(camera, events),
        labels,
        presses,
        tap_events,
        background_events,
        dropped_events,
    })
}

impl TruthManifest {
    /// Combines the per-camera truth of both cameras.
    pub fn assemble(spec: &SynthSpec, cams: [&CameraOutput; 2]) -> Self {
        let schedule = spec.schedule();
        let presses = schedule
            .presses
            .iter()
            .enumerate()
            .map(|(seq, p)| {
                let [a, b] = cams.map(|c| c.presses[seq]);
                PressTruth {
                    sequence: seq,
                    press_index: p.press_index,
                    repetition: p.repetition,
                    x_mm: p.x_mm,
                    y_mm: p.y_mm,
                    onset_s: a.onset_s,
                    u_star: [a.u_star, b.u_star],
                    u_burst: [a.u_burst, b.u_burst],
                    events: [a.events, b.events],
                    secondary_u: [a.secondary_u, b.secondary_u],
                    secondary_events: [a.secondary_events, b.secondary_events],
                    in_view: a.u_star.is_some() && b.u_star.is_some(),
                }
            })
            .collect();
        TruthManifest {
            seed: spec.seed,
            duration_s: spec.duration_s(),
            origin_s: spec.origin_s(),
            cam2_clock_offset_us: libm::round(spec.cam2_clock_offset_s * 1e6) as i64,
            taps_s: if spec.taps.enabled { tap_times(spec) } else { Vec::new() },
            tap_events: cams.map(|c| c.tap_events),
            background_events: cams.map(|c| c.background_events),
            dropped_events: cams.map(|c| c.dropped_events),
            presses,
        }
    }
}

/// Generates both camera streams, per-event labels and the truth manifest.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    let a = generate_camera(spec, CameraId::Cam1, true)?;
    let b = generate_camera(spec, CameraId::Cam2, true)?;
    let manifest = TruthManifest::assemble(spec, [&a, &b]);
    let label = |c: CameraOutput| (c.stream, c.labels.unwrap_or_default());
    let ((s1, l1), (s2, l2)) = (label(a), label(b));
    Ok(SynthOutput { streams: [s1, s2], labels: [l1, l2], manifest })
}
