//! Angle canonicalization, 8-class binning, and regression encoding.
//!
//! Orientations are degrees in `[0, 180)`; a box at `theta` and
//! `theta + 180` is the same rectangle, so everything here is defined on the
//! half turn. Two binning schemes are supported, both with eight classes of
//! 22.5 degrees and the same representative angles `i * 22.5`:
//!
//! * [`AngleScheme::Model`]: class 0 covers `[-10, 12.5)`, so bin edges sit
//!   at `22.5 * i - 10`. This is the scheme the detection head is trained
//!   with.
//! * [`AngleScheme::Dataset`]: class 0 covers `[-11.25, 11.25)`, centering
//!   each class on its representative angle. Annotation statistics are
//!   reported in this scheme.
//!
//! Negative interval bounds are to be read modulo 180: the leftover arc at
//! the top of the range (for example `[170, 180)` in the model scheme) wraps
//! into class 0.

use crate::geometry::wrap_deg;
use serde::{Deserialize, Serialize};

pub const NUM_ANGLE_CLASSES: usize = 8;
const CLASS_WIDTH_DEG: f64 = 22.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleScheme {
    Model,
    Dataset,
}

impl AngleScheme {
    /// Lower bound of class 0, in degrees.
    fn class_zero_start(self) -> f64 {
        match self {
            AngleScheme::Model => -10.0,
            AngleScheme::Dataset => -11.25,
        }
    }

    /// Inclusive lower bound of class `index`, before mod-180 wrapping.
    pub fn lower_bound(self, index: usize) -> f64 {
        debug_assert!(index < NUM_ANGLE_CLASSES);
        self.class_zero_start() + CLASS_WIDTH_DEG * index as f64
    }

    /// Exclusive upper bound of class `index`, before mod-180 wrapping.
    pub fn upper_bound(self, index: usize) -> f64 {
        self.lower_bound(index) + CLASS_WIDTH_DEG
    }
}

/// Angle class as an index `0..8` under a given scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngleClass {
    pub scheme: AngleScheme,
    pub index: usize,
}

/// Wraps an angle in degrees into the canonical `[0, 180)` range.
pub fn wrap_angle(theta_deg: f64) -> f64 {
    wrap_deg(theta_deg)
}

/// Assigns `theta_deg` to its angle class under `scheme`.
///
/// Intervals are half open (lower bound inclusive), and the arc past the
/// last upper bound wraps into class 0, so every finite angle maps to
/// exactly one class.
pub fn bin_angle(theta_deg: f64, scheme: AngleScheme) -> AngleClass {
    let mut t = wrap_angle(theta_deg);
    // the top arc is the wrapped start of class 0
    if t >= scheme.lower_bound(0) + 180.0 {
        t -= 180.0;
    }
    let index = ((t - scheme.class_zero_start()) / CLASS_WIDTH_DEG) as usize;
    AngleClass {
        scheme,
        index: index.min(NUM_ANGLE_CLASSES - 1),
    }
}

/// Canonical angle for a class: the center of its dataset-scheme interval,
/// `index * 22.5` degrees, shared by both schemes.
pub fn representative_angle(class: AngleClass) -> f64 {
    debug_assert!(class.index < NUM_ANGLE_CLASSES);
    class.index as f64 * CLASS_WIDTH_DEG
}

/// Maps an angle to the regression target `theta / 180` in `[0, 1)`.
pub fn encode_angle_regression(theta_deg: f64) -> f64 {
    wrap_angle(theta_deg) / 180.0
}

/// Inverse of [`encode_angle_regression`]; out-of-range inputs wrap mod 1.
pub fn decode_angle_regression(t: f64) -> f64 {
    decode_angle_regression_wrapped(t).0
}

/// Like [`decode_angle_regression`] but also reports whether the input fell
/// outside `[0, 1)` and had to be wrapped.
pub fn decode_angle_regression_wrapped(t: f64) -> (f64, bool) {
    if (0.0..1.0).contains(&t) {
        (t * 180.0, false)
    } else {
        (wrap_angle(t.rem_euclid(1.0) * 180.0), true)
    }
}
