//! Event-camera tactile skin localization.
//!
//! Two corner-mounted event cameras watch the underside of a translucent skin.
//! A press lights up a blob in each camera's frame; the column of that blob
//! gives a bearing, and two bearings give a contact point.

#![no_std]
// `!(x > 0.0)` guards reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ablate;
pub mod calibrate;
pub mod cluster;
pub mod error;
pub mod events;
pub mod geometry;
pub mod latency;
pub mod metrics;
pub mod pipeline;
pub mod segment;
pub mod stats;
pub mod sync;
pub mod synth;

pub use error::{Error, Result};
pub use events::{CameraId, Event, EventStream, Polarity, Roi, SensorLayout};
pub use geometry::{triangulate, CameraModel, Triangulation};
