//! Press schedule and schedule-driven segmentation of aligned streams into
//! per-press trials.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::events::{bin_counts, EventStream, SensorLayout};

/// One nominal press of the robot program.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScheduledPress {
    /// Seconds after the first sync tap.
    pub onset_s: f64,
    /// Index of the grid location being pressed.
    pub press_index: usize,
    pub repetition: usize,
    pub x_mm: f64,
    pub y_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PressSchedule {
    pub press_duration_s: f64,
    pub presses: Vec<ScheduledPress>,
}

/// Timing knobs used to expand a layout into a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ScheduleTiming {
    /// Delay from the first tap to the first press.
    pub first_press_s: f64,
    /// Onset-to-onset interval between consecutive presses.
    pub press_period_s: f64,
    /// Extra pause while the robot returns to the start between repetitions.
    pub repetition_gap_s: f64,
}

impl Default for ScheduleTiming {
    fn default() -> Self {
        // 2 tap intervals + 3 s pause; ~3.7 s period (27 presses per 100 s)
        ScheduleTiming { first_press_s: 5.0, press_period_s: 3.7, repetition_gap_s: 5.0 }
    }
}

impl PressSchedule {
    /// Every grid point pressed in order, `layout.repetitions` times.
    pub fn from_layout(layout: &SensorLayout, timing: &ScheduleTiming) -> Self {
        Self::from_layout_repetitions(layout, timing, layout.repetitions)
    }

    pub fn from_layout_repetitions(layout: &SensorLayout, timing: &ScheduleTiming, repetitions: usize) -> Self {
        let mut presses = Vec::with_capacity(layout.grid_points.len() * repetitions);
        let mut t = timing.first_press_s;
        for rep in 0..repetitions {
            if rep > 0 {
                t += timing.repetition_gap_s;
            }
            for (i, &(x, y)) in layout.grid_points.iter().enumerate() {
                presses.push(ScheduledPress { onset_s: t, press_index: i, repetition: rep, x_mm: x, y_mm: y });
                t += timing.press_period_s;
            }
        }
        PressSchedule { press_duration_s: layout.press_duration_s, presses }
    }

    pub fn len(&self) -> usize {
        self.presses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.presses.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.press_duration_s > 0.0) {
            return Err(Error::NonPositive("press_duration_s"));
        }
        if self.presses.windows(2).any(|w| !(w[1].onset_s > w[0].onset_s)) {
            return Err(Error::Config("press onsets must be strictly increasing".into()));
        }
        if self.presses.iter().any(|p| !p.x_mm.is_finite() || !p.y_mm.is_finite()) {
            return Err(Error::Config("every press needs a finite ground-truth coordinate".into()));
        }
        Ok(())
    }

    /// Sub-schedule restricted to one repetition.
    pub fn repetition(&self, rep: usize) -> PressSchedule {
        PressSchedule {
            press_duration_s: self.press_duration_s,
            presses: self.presses.iter().copied().filter(|p| p.repetition == rep).collect(),
        }
    }

    /// Time of the end of the last press window, relative to the first tap.
    pub fn end_s(&self) -> f64 {
        self.presses.last().map_or(0.0, |p| p.onset_s + self.press_duration_s)
    }
}

/// Half-open time window `[start, end)` in aligned seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// One press, as event index ranges into the two aligned streams.
#[derive(Debug, Clone, PartialEq)]
pub struct PressTrial {
    /// Position in the schedule.
    pub sequence: usize,
    pub press_index: usize,
    pub repetition: usize,
    pub window: Window,
    pub baseline_window: Window,
    pub events: [Range<usize>; 2],
    pub baseline_events: [Range<usize>; 2],
    pub ground_truth: (f64, f64),
    /// Onset lies outside the recorded extent.
    pub missing: bool,
}

impl PressTrial {
    pub fn event_count(&self) -> usize {
        self.events[0].len() + self.events[1].len()
    }
}

/// Cuts one trial per scheduled press. `origin_s` is the aligned time of the
/// first sync tap; `baseline_s` is the background snippet length preceding
/// each press, clipped so it never reaches into the previous press window.
pub fn segment_by_schedule(
    s1: &EventStream,
    s2: &EventStream,
    schedule: &PressSchedule,
    origin_s: f64,
    baseline_s: f64,
) -> Result<Vec<PressTrial>> {
    schedule.validate()?;
    if baseline_s < 0.0 {
        return Err(Error::NonPositive("baseline_s"));
    }
    let extent = match (s1.extent_us(), s2.extent_us()) {
        (Some(a), Some(b)) => Some((a.0.min(b.0) as f64 * 1e-6, a.1.max(b.1) as f64 * 1e-6)),
        (Some(a), None) | (None, Some(a)) => Some((a.0 as f64 * 1e-6, a.1 as f64 * 1e-6)),
        (None, None) => None,
    };

    let mut prev_end = f64::NEG_INFINITY;
    let mut trials = Vec::with_capacity(schedule.len());
    for (sequence, p) in schedule.presses.iter().enumerate() {
        let t0 = origin_s + p.onset_s;
        let t1 = t0 + schedule.press_duration_s;
        let b0 = (t0 - baseline_s).max(prev_end).min(t0);
        let window = Window { start: t0, end: t1 };
        let baseline_window = Window { start: b0, end: t0 };
        let missing = extent.is_some_and(|(lo, hi)| t0 < lo || t0 > hi);
        trials.push(PressTrial {
            sequence,
            press_index: p.press_index,
            repetition: p.repetition,
            window,
            baseline_window,
            events: [s1.index_range_s(t0, t1), s2.index_range_s(t0, t1)],
            baseline_events: [s1.index_range_s(b0, t0), s2.index_range_s(b0, t0)],
            ground_truth: (p.x_mm, p.y_mm),
            missing,
        });
        prev_end = t1;
    }
    Ok(trials)
}

/// Onset refinement: snaps `t0` to the first `bin_s` bin within ±0.5 s of
/// the nominal onset whose combined-camera rate exceeds three times the
/// trial's baseline mean rate. Returns the nominal onset when no bin
/// qualifies.
pub fn refine_onset(trial: &PressTrial, s1: &EventStream, s2: &EventStream, bin_s: f64) -> f64 {
    const SEARCH_S: f64 = 0.5;
    const FACTOR: f64 = 3.0;
    let t0 = trial.window.start;
    if !(bin_s > 0.0) {
        return t0;
    }
    let base_dur = trial.baseline_window.duration();
    let base_count = (trial.baseline_events[0].len() + trial.baseline_events[1].len()) as f64;
    // one event per baseline window keeps the threshold positive
    let base_rate = if base_dur > 0.0 { base_count.max(1.0) / base_dur } else { 0.0 };
    let threshold = FACTOR * base_rate;

    let start = t0 - SEARCH_S;
    let n_bins = libm::ceil(2.0 * SEARCH_S / bin_s) as usize;
    let mut counts = bin_counts(
        s1.events()[s1.index_range_s(start, t0 + SEARCH_S)].iter().map(|e| s1.aligned_s(e)),
        start,
        bin_s,
        n_bins,
    );
    let c2 = bin_counts(
        s2.events()[s2.index_range_s(start, t0 + SEARCH_S)].iter().map(|e| s2.aligned_s(e)),
        start,
        bin_s,
        n_bins,
    );
    for (a, b) in counts.iter_mut().zip(c2) {
        *a += b;
    }
    counts.iter().position(|&c| c / bin_s > threshold).map_or(t0, |i| start + i as f64 * bin_s)
}
