//! Allocation-only core of the wayfinder assistive-perception engine.
//!
//! Everything in this crate is deterministic and free of IO: frames come in as
//! values, feedback goes out as values. The `wayfinder` crate wires these pieces
//! to files, sockets and a clock.
//!
//! Module map:
//!
//! * [`model`] - boxes, frames, detections and camera intrinsics.
//! * [`pipeline`] - preprocess, detect and normalize one frame.
//! * [`distance`] - known-width calibration and size-ratio distance tracking.
//! * [`feedback`] - haptic patterns and the prioritized speech queue.
//! * [`interaction`] - gesture recognition and page navigation.
//! * [`reading`] - OCR reading-order assembly.
//! * [`currency`] - banknote tallies in integer minor units.
//! * [`sim`] - the synthetic world used as detector and test oracle.
//! * [`session`] - the per-session loop composing all of the above.
#![no_std]

extern crate alloc;

pub mod currency;
pub mod distance;
pub mod feedback;
pub mod interaction;
pub mod model;
pub mod pipeline;
pub mod reading;
pub mod session;
pub mod sim;

pub use model::{BoundingBox, CameraIntrinsics, Detection, Dims, Frame, ModelError, Space};
