//! Oriented bounding box toolkit for weapon detection datasets.
//!
//! The crate covers the data side of an oriented detector: box geometry
//! with exact rotated IoU, angle-class codecs, training-target encoding,
//! annotation formats with lossless conversion, detection evaluation, and
//! dataset statistics.

pub mod angle;
pub mod annotation;
pub mod eval;
pub mod geometry;
pub mod stats;
pub mod targets;
