//! DVS event data model: events, per-camera streams, the sensor layout, ROI
//! cropping and rate histograms.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Horizontal sensor resolution in pixels.
pub const SENSOR_WIDTH: u16 = 640;
/// Vertical sensor resolution in pixels.
pub const SENSOR_HEIGHT: u16 = 480;

/// Brightness-change sign of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CameraId {
    Cam1,
    Cam2,
}

impl CameraId {
    pub const BOTH: [CameraId; 2] = [CameraId::Cam1, CameraId::Cam2];

    pub fn index(self) -> usize {
        match self {
            CameraId::Cam1 => 0,
            CameraId::Cam2 => 1,
        }
    }
}

impl core::fmt::Display for CameraId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CameraId::Cam1 => f.write_str("cam1"),
            CameraId::Cam2 => f.write_str("cam2"),
        }
    }
}

/// A single brightness-change report. `t_us` is the camera's own clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    pub t_us: u64,
    pub u: u16,
    pub v: u16,
    pub polarity: Polarity,
}

impl Event {
    /// Checked constructor enforcing the sensor resolution.
    pub fn new(t_us: u64, u: u16, v: u16, polarity: Polarity) -> Result<Self> {
        if u >= SENSOR_WIDTH || v >= SENSOR_HEIGHT {
            return Err(Error::PixelOutOfRange { u, v });
        }
        Ok(Event { t_us, u, v, polarity })
    }
}

/// Inclusive vertical crop band `[v_lo, v_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Roi {
    pub v_lo: u16,
    pub v_hi: u16,
}

impl Default for Roi {
    fn default() -> Self {
        Roi { v_lo: 200, v_hi: 360 }
    }
}

impl Roi {
    pub fn full_frame() -> Self {
        Roi { v_lo: 0, v_hi: SENSOR_HEIGHT - 1 }
    }

    pub fn new(v_lo: u16, v_hi: u16) -> Result<Self> {
        if v_lo >= v_hi || v_hi > SENSOR_HEIGHT {
            return Err(Error::InvalidRoi { v_lo, v_hi });
        }
        Ok(Roi { v_lo, v_hi })
    }

    #[inline]
    pub fn contains(&self, v: u16) -> bool {
        v >= self.v_lo && v <= self.v_hi
    }

    /// Number of pixel rows inside the band that exist on the sensor.
    pub fn rows(&self) -> u32 {
        let hi = self.v_hi.min(SENSOR_HEIGHT - 1);
        u32::from(hi) - u32::from(self.v_lo) + 1
    }
}

/// Time-ordered events of one camera.
///
/// `time_offset_us` maps the camera clock onto the shared (aligned) clock:
/// `aligned = t_us + time_offset_us`. Events themselves are never rewritten.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub camera: CameraId,
    events: Vec<Event>,
    pub roi: Roi,
    pub time_offset_us: i64,
}

impl EventStream {
    /// Builds a stream, stably sorting by timestamp.
    pub fn new(camera: CameraId, mut events: Vec<Event>) -> Self {
        if !events.windows(2).all(|w| w[0].t_us <= w[1].t_us) {
            events.sort_by_key(|e| e.t_us);
        }
        EventStream { camera, events, roi: Roi::default(), time_offset_us: 0 }
    }

    pub fn empty(camera: CameraId) -> Self {
        Self::new(camera, Vec::new())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Same metadata, different event list (which must already be sorted).
    pub(crate) fn with_events(&self, events: Vec<Event>) -> Self {
        debug_assert!(events.windows(2).all(|w| w[0].t_us <= w[1].t_us));
        EventStream { camera: self.camera, events, roi: self.roi, time_offset_us: self.time_offset_us }
    }

    #[inline]
    pub fn aligned_us(&self, e: &Event) -> i64 {
        e.t_us as i64 + self.time_offset_us
    }

    #[inline]
    pub fn aligned_s(&self, e: &Event) -> f64 {
        self.aligned_us(e) as f64 * 1e-6
    }

    /// Aligned time extent `[first, last]` in microseconds.
    pub fn extent_us(&self) -> Option<(i64, i64)> {
        let first = self.events.first()?;
        let last = self.events.last()?;
        Some((self.aligned_us(first), self.aligned_us(last)))
    }

    /// Index range of events whose aligned time falls in `[t0_us, t1_us)`.
    pub fn index_range_us(&self, t0_us: i64, t1_us: i64) -> core::ops::Range<usize> {
        let lo = self.events.partition_point(|e| self.aligned_us(e) < t0_us);
        let hi = self.events.partition_point(|e| self.aligned_us(e) < t1_us);
        lo..hi.max(lo)
    }

    /// Index range for a window given in aligned seconds.
    pub fn index_range_s(&self, t0_s: f64, t1_s: f64) -> core::ops::Range<usize> {
        self.index_range_us(secs_to_us(t0_s), secs_to_us(t1_s))
    }

    /// Aligned event times in seconds.
    pub fn times_s(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(move |e| self.aligned_s(e))
    }
}

#[inline]
pub fn secs_to_us(t_s: f64) -> i64 {
    libm::round(t_s * 1e6) as i64
}

/// Physical sensor layout and press protocol constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensorLayout {
    pub side_mm: f64,
    pub thickness_mm: f64,
    pub grid_points: Vec<(f64, f64)>,
    pub grid_spacing_mm: f64,
    pub repetitions: usize,
    pub press_duration_s: f64,
    pub bits_per_event: u32,
}

impl Default for SensorLayout {
    fn default() -> Self {
        let grid_spacing_mm = 4.0;
        SensorLayout {
            side_mm: 100.0,
            thickness_mm: 4.0,
            grid_points: meander_grid(25, 10, grid_spacing_mm, (2.0, 30.0)),
            grid_spacing_mm,
            repetitions: 10,
            press_duration_s: 0.55,
            bits_per_event: 21,
        }
    }
}

impl SensorLayout {
    pub fn diagonal_mm(&self) -> f64 {
        self.side_mm * core::f64::consts::SQRT_2
    }

    pub fn area_mm2(&self) -> f64 {
        self.side_mm * self.side_mm
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |&(x, y): &(f64, f64)| (0.0..=self.side_mm).contains(&x) && (0.0..=self.side_mm).contains(&y);
        if let Some(p) = self.grid_points.iter().find(|p| !inside(p)) {
            return Err(Error::Config(alloc::format!("grid point ({}, {}) outside the sensor", p.0, p.1)));
        }
        if self.press_duration_s <= 0.0 || self.repetitions == 0 {
            return Err(Error::Config("press duration and repetitions must be positive".into()));
        }
        Ok(())
    }
}

/// Boustrophedon grid: rows alternate direction, starting at `origin`.
pub fn meander_grid(cols: usize, rows: usize, spacing_mm: f64, origin: (f64, f64)) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        let y = origin.1 + r as f64 * spacing_mm;
        for c in 0..cols {
            let c = if r % 2 == 0 { c } else { cols - 1 - c };
            pts.push((origin.0 + c as f64 * spacing_mm, y));
        }
    }
    pts
}

/// Keeps only events with `v_lo <= v <= v_hi`.
pub fn crop_roi(stream: &EventStream, v_lo: u16, v_hi: u16) -> Result<EventStream> {
    let roi = Roi::new(v_lo, v_hi)?;
    let events = stream.events.iter().copied().filter(|e| roi.contains(e.v)).collect();
    let mut out = stream.with_events(events);
    out.roi = roi;
    Ok(out)
}

/// [`crop_roi`] without copying: the stream keeps only events in the band.
pub fn crop_roi_in_place(stream: &mut EventStream, v_lo: u16, v_hi: u16) -> Result<()> {
    let roi = Roi::new(v_lo, v_hi)?;
    stream.events.retain(|e| roi.contains(e.v));
    stream.events.shrink_to_fit();
    stream.roi = roi;
    Ok(())
}

/// [`crop_roi_in_place`] that also returns the original position of every
/// kept event. Streams are limited to `u32::MAX` events.
pub fn crop_roi_tracked(stream: &mut EventStream, v_lo: u16, v_hi: u16) -> Result<Vec<u32>> {
    let roi = Roi::new(v_lo, v_hi)?;
    let n = u32::try_from(stream.events.len()).map_err(|_| Error::Config("stream exceeds u32::MAX events".into()))?;
    let ordinals: Vec<u32> = (0..n).filter(|&i| roi.contains(stream.events[i as usize].v)).collect();
    crop_roi_in_place(stream, v_lo, v_hi)?;
    Ok(ordinals)
}

/// Fixed-width histogram of event rate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateSeries {
    pub start_s: f64,
    pub bin_s: f64,
    /// Events per second in each bin.
    pub values: Vec<f64>,
}

impl RateSeries {
    pub fn empty(bin_s: f64) -> Self {
        RateSeries { start_s: 0.0, bin_s, values: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        self.start_s + i as f64 * self.bin_s
    }

    /// Event count represented by the series.
    pub fn total_count(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bin_s
    }
}

/// Bins event times (seconds) into `n_bins` bins of width `bin_s` starting at `start_s`.
/// Times outside the tiled range are ignored.
pub fn bin_counts(times_s: impl Iterator<Item = f64>, start_s: f64, bin_s: f64, n_bins: usize) -> Vec<f64> {
    let mut counts = alloc::vec![0.0; n_bins];
    for t in times_s {
        let x = (t - start_s) / bin_s;
        if x < 0.0 {
            continue;
        }
        let i = libm::floor(x) as usize;
        if i < n_bins {
            counts[i] += 1.0;
        }
    }
    counts
}

/// Event-rate histogram tiling `[t_first, t_last]` of the stream.
pub fn event_rate_histogram(stream: &EventStream, bin_s: f64) -> Result<RateSeries> {
    let Some((first, _)) = stream.extent_us() else {
        if !(bin_s > 0.0) {
            return Err(Error::NonPositive("bin_s"));
        }
        return Ok(RateSeries::empty(bin_s));
    };
    event_rate_histogram_from(stream, bin_s, first as f64 * 1e-6)
}

/// Histogram with an explicit origin; bins tile `[origin, t_last]`.
pub fn event_rate_histogram_from(stream: &EventStream, bin_s: f64, origin_s: f64) -> Result<RateSeries> {
    if !(bin_s > 0.0) {
        return Err(Error::NonPositive("bin_s"));
    }
    let Some((_, last)) = stream.extent_us() else {
        return Ok(RateSeries { start_s: origin_s, bin_s, values: Vec::new() });
    };
    let span = last as f64 * 1e-6 - origin_s;
    let n_bins = if span < 0.0 { 0 } else { libm::floor(span / bin_s) as usize + 1 };
    let mut values = bin_counts(stream.times_s(), origin_s, bin_s, n_bins);
    for v in &mut values {
        *v /= bin_s;
    }
    Ok(RateSeries { start_s: origin_s, bin_s, values })
}

/// Data rate in kB/s of the events inside `[t0_s, t1_s)`.
pub fn bit_rate(stream: &EventStream, t0_s: f64, t1_s: f64, bits_per_event: u32) -> Result<f64> {
    if !(t1_s > t0_s) {
        return Err(Error::NonPositive("t1 - t0"));
    }
    let n = stream.index_range_s(t0_s, t1_s).len();
    Ok(n as f64 * f64::from(bits_per_event) / 8.0 / (t1_s - t0_s) / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ev(t: u64, u: u16, v: u16) -> Event {
        Event::new(t, u, v, Polarity::On).unwrap()
    }

    #[test]
    fn event_rejects_out_of_range_pixels() {
        assert!(Event::new(0, 640, 0, Polarity::On).is_err());
        assert!(Event::new(0, 0, 480, Polarity::Off).is_err());
        assert!(Event::new(0, 639, 479, Polarity::Off).is_ok());
    }

    #[test]
    fn stream_sort_is_stable() {
        let s = EventStream::new(CameraId::Cam1, vec![ev(5, 1, 0), ev(3, 2, 0), ev(5, 3, 0), ev(3, 4, 0)]);
        let us: Vec<u16> = s.events().iter().map(|e| e.u).collect();
        assert_eq!(us, vec![2, 4, 1, 3]);
    }

    #[test]
    fn crop_keeps_band_only() {
        let s = EventStream::new(CameraId::Cam1, vec![ev(0, 1, 150), ev(1, 1, 250), ev(2, 1, 400)]);
        let c = crop_roi(&s, 200, 360).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.events()[0].v, 250);
        assert_eq!(c.roi, Roi { v_lo: 200, v_hi: 360 });
    }

    #[test]
    fn crop_bounds_are_inclusive() {
        let s = EventStream::new(CameraId::Cam1, vec![ev(0, 1, 199), ev(1, 1, 200), ev(2, 1, 360), ev(3, 1, 361)]);
        assert_eq!(crop_roi(&s, 200, 360).unwrap().len(), 2);
    }

    #[test]
    fn crop_full_frame_is_identity() {
        let s = EventStream::new(CameraId::Cam2, vec![ev(0, 1, 0), ev(1, 1, 479), ev(2, 5, 240)]);
        assert_eq!(crop_roi(&s, 0, 479).unwrap().events(), s.events());
    }

    #[test]
    fn crop_rejects_bad_bounds() {
        let s = EventStream::empty(CameraId::Cam1);
        assert!(matches!(crop_roi(&s, 300, 200), Err(Error::InvalidRoi { .. })));
        assert!(crop_roi(&s, 10, 10).is_err());
        assert!(crop_roi(&s, 0, 481).is_err());
        assert!(crop_roi(&s, 0, 480).is_ok());
    }

    #[test]
    fn histogram_uniform_events() {
        let events = (0..100).map(|i| ev(i * 10_000, 0, 0)).collect();
        let s = EventStream::new(CameraId::Cam1, events);
        let h = event_rate_histogram(&s, 0.01).unwrap();
        assert_eq!(h.len(), 100);
        for v in &h.values {
            assert!((v - 100.0).abs() <= 100.0 + 1e-9);
        }
        assert!((h.total_count() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_single_event() {
        let s = EventStream::new(CameraId::Cam1, vec![ev(123, 0, 0)]);
        let h = event_rate_histogram(&s, 0.01).unwrap();
        assert_eq!(h.values, vec![100.0]);
    }

    #[test]
    fn histogram_empty_and_bad_bin() {
        let s = EventStream::empty(CameraId::Cam1);
        assert!(event_rate_histogram(&s, 0.01).unwrap().is_empty());
        assert!(event_rate_histogram(&s, 0.0).is_err());
    }

    #[test]
    fn bit_rate_arithmetic() {
        let events = (0..28_600u64).map(|i| ev(i * 1_000_000 / 28_600, 0, 0)).collect();
        let s = EventStream::new(CameraId::Cam1, events);
        let kbs = bit_rate(&s, 0.0, 1.0, 21).unwrap();
        assert!((kbs - 75.075).abs() < 1e-9, "{kbs}");
        assert_eq!(bit_rate(&EventStream::empty(CameraId::Cam1), 0.0, 1.0, 21).unwrap(), 0.0);
        assert!(bit_rate(&s, 1.0, 1.0, 21).is_err());
    }

    #[test]
    fn default_layout_matches_protocol() {
        let l = SensorLayout::default();
        assert_eq!(l.grid_points.len(), 250);
        l.validate().unwrap();
        // consecutive meander points are one grid step apart
        for w in l.grid_points.windows(2) {
            let d = libm::hypot(w[1].0 - w[0].0, w[1].1 - w[0].1);
            assert!((d - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn index_range_respects_offset() {
        let mut s = EventStream::new(CameraId::Cam2, vec![ev(1_000_000, 0, 0), ev(2_000_000, 0, 0)]);
        s.time_offset_us = -1_000_000;
        assert_eq!(s.index_range_s(0.0, 0.5), 0..1);
        assert_eq!(s.index_range_s(0.5, 2.0), 1..2);
    }
}
