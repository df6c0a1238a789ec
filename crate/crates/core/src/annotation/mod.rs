//! Annotation data model, format parsers and serializers, and validation.
//!
//! Four on-disk formats are supported:
//!
//! * roLabelImg XML: rotated boxes, one file per image, angle stored in
//!   radians.
//! * VOC XML: axis-aligned boxes, one file per image; parsed boxes get an
//!   angle of zero.
//! * YOLO text: one `.txt` per image with coordinates normalized by the
//!   image size and an optional sixth angle token in `[0, 1)`. The text file
//!   carries no image size, so loading needs a `.size` sidecar or an
//!   explicit size.
//! * CSV: the whole set in one file, one row per object, with the
//!   unrotated box extent and an angle class index instead of a free angle.
//!
//! Parsers canonicalize on ingest (angles wrapped into `[0, 180)`, class
//! names matched case-insensitively) and never hand out a box that violates
//! the geometry invariants. In [`ParseMode::Lenient`] an invalid object is
//! skipped and reported; in [`ParseMode::Strict`] it fails the whole parse.

mod csv;
mod rolabelimg;
mod voc;
mod xml;
mod yolo;

pub mod convert;

pub use self::csv::{parse_csv_records, serialize_csv_records, CSV_HEADER};
pub use self::rolabelimg::{parse_rolabelimg, serialize_rolabelimg};
pub use self::voc::{parse_voc, serialize_voc};
pub use self::yolo::{parse_yolo, serialize_yolo};

use crate::geometry::{GeometryError, OrientedBox};
use crate::targets::WeaponClass;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnnotationFormat {
    RoLabelImg,
    Voc,
    Yolo,
    Csv,
}

impl AnnotationFormat {
    pub const ALL: [AnnotationFormat; 4] = [
        AnnotationFormat::RoLabelImg,
        AnnotationFormat::Voc,
        AnnotationFormat::Yolo,
        AnnotationFormat::Csv,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            AnnotationFormat::RoLabelImg => "rolabelimg",
            AnnotationFormat::Voc => "voc",
            AnnotationFormat::Yolo => "yolo",
            AnnotationFormat::Csv => "csv",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag.trim().to_ascii_lowercase().as_str() {
            "rolabelimg" => Some(AnnotationFormat::RoLabelImg),
            "voc" => Some(AnnotationFormat::Voc),
            "yolo" => Some(AnnotationFormat::Yolo),
            "csv" => Some(AnnotationFormat::Csv),
            _ => None,
        }
    }

    /// Extension of the per-image files (CSV is one file for the set).
    pub fn extension(self) -> &'static str {
        match self {
            AnnotationFormat::RoLabelImg | AnnotationFormat::Voc => "xml",
            AnnotationFormat::Yolo => "txt",
            AnnotationFormat::Csv => "csv",
        }
    }
}

impl fmt::Display for AnnotationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One labeled object: a weapon class and its rotated box.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedObject {
    pub class: WeaponClass,
    pub bbox: OrientedBox,
}

/// All objects of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_name: String,
    pub image_width: u32,
    pub image_height: u32,
    pub objects: Vec<AnnotatedObject>,
}

/// A collection of annotations tagged with the format they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub annotations: Vec<Annotation>,
    pub source_format: AnnotationFormat,
}

impl AnnotationSet {
    pub fn new(annotations: Vec<Annotation>, source_format: AnnotationFormat) -> Self {
        AnnotationSet {
            annotations,
            source_format,
        }
    }

    pub fn total_objects(&self) -> usize {
        self.annotations.iter().map(|a| a.objects.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Any invalid object fails the parse.
    Strict,
    /// Invalid objects are skipped and reported alongside the result.
    Lenient,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed XML at line {line}, column {col}: {msg}")]
    Xml { line: u32, col: u32, msg: String },
    #[error("missing element <{element}> {context}")]
    MissingElement { element: String, context: String },
    #[error("invalid number {value:?} in {field} {context}")]
    InvalidNumber {
        field: String,
        value: String,
        context: String,
    },
    #[error("image size must be positive, got {width}x{height}")]
    BadImageSize { width: i64, height: i64 },
    #[error("line {line}: expected 5 or 6 fields, got {got}")]
    TokenCount { line: usize, got: usize },
    #[error("line {line}: {field} = {value} is outside [0, 1]")]
    OutOfRange { line: usize, field: String, value: f64 },
    #[error("unknown class {name:?} {context}")]
    UnknownClass { name: String, context: String },
    #[error("angle class {value} is outside 0..8 {context}")]
    AngleClassRange { value: i64, context: String },
    #[error("bad box geometry {context}: {source}")]
    Geometry {
        context: String,
        source: GeometryError,
    },
    #[error("CSV header mismatch: expected {expected:?}, got {got:?}")]
    CsvHeader { expected: String, got: String },
    #[error("CSV row {line}: image {name:?} repeats with a different size")]
    InconsistentSize { line: usize, name: String },
    #[error("malformed CSV: {0}")]
    Csv(#[from] ::csv::Error),
}

/// Result of one parse: the annotation plus anything skipped in lenient
/// mode.
#[derive(Debug)]
pub struct Parsed {
    pub annotation: Annotation,
    pub skipped: Vec<Violation>,
}

/// Result of parsing a whole-set source (CSV).
#[derive(Debug)]
pub struct ParsedSet {
    pub annotations: Vec<Annotation>,
    pub skipped: Vec<Violation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    NonPositiveSize,
    OutOfImage,
    DuplicateImageName,
    AngleOutOfRange,
    UnknownClass,
    Malformed,
    /// The target format has no way to carry this annotation.
    Unrepresentable,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::NonPositiveSize => "non_positive_size",
            ViolationKind::OutOfImage => "out_of_image",
            ViolationKind::DuplicateImageName => "duplicate_image_name",
            ViolationKind::AngleOutOfRange => "angle_out_of_range",
            ViolationKind::UnknownClass => "unknown_class",
            ViolationKind::Malformed => "malformed",
            ViolationKind::Unrepresentable => "unrepresentable",
        }
    }
}

/// One rule violation, tied to where it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Human-readable position: image name, object index, file, or line.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.kind.label(), self.location, self.message)
    }
}

/// Violations collected over a set, with per-kind counts.
#[derive(Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn counts(&self) -> BTreeMap<ViolationKind, usize> {
        let mut m = BTreeMap::new();
        for v in &self.violations {
            *m.entry(v.kind).or_insert(0) += 1;
        }
        m
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return writeln!(f, "no violations");
        }
        for (kind, n) in self.counts() {
            writeln!(f, "{}: {}", kind.label(), n)?;
        }
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Checks set-level rules: image names must be unique, and every object's
/// envelope must intersect its image rectangle.
///
/// Rules that would corrupt the math (non-positive sizes, wild angles) are
/// already unrepresentable in [`Annotation`]; parsers report those through
/// [`Parsed::skipped`] in lenient mode, which the validate pipeline merges
/// into the same report.
pub fn validate_set(set: &AnnotationSet) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &set.annotations {
        *seen.entry(a.image_name.as_str()).or_insert(0) += 1;
        let w = a.image_width as f64;
        let h = a.image_height as f64;
        for (i, obj) in a.objects.iter().enumerate() {
            let env = obj.bbox.envelope();
            let outside =
                env.xmax() < 0.0 || env.xmin() > w || env.ymax() < 0.0 || env.ymin() > h;
            if outside {
                report.push(Violation {
                    kind: ViolationKind::OutOfImage,
                    location: format!("{} object {}", a.image_name, i),
                    message: format!(
                        "envelope [{:.1}, {:.1}] x [{:.1}, {:.1}] misses the {}x{} image",
                        env.xmin(),
                        env.xmax(),
                        env.ymin(),
                        env.ymax(),
                        a.image_width,
                        a.image_height
                    ),
                });
            }
        }
    }
    for (name, n) in seen {
        if n > 1 {
            report.push(Violation {
                kind: ViolationKind::DuplicateImageName,
                location: name.to_string(),
                message: format!("appears {n} times"),
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(name: &str, objects: Vec<AnnotatedObject>) -> Annotation {
        Annotation {
            image_name: name.to_string(),
            image_width: 200,
            image_height: 100,
            objects,
        }
    }

    fn obj(cx: f64, cy: f64) -> AnnotatedObject {
        AnnotatedObject {
            class: WeaponClass::Gun,
            bbox: OrientedBox::new(cx, cy, 10.0, 5.0, 30.0).unwrap(),
        }
    }

    #[test]
    fn clean_set_validates_empty() {
        let set = AnnotationSet::new(
            vec![ann("a.jpg", vec![obj(50.0, 50.0)]), ann("b.jpg", vec![])],
            AnnotationFormat::RoLabelImg,
        );
        let report = validate_set(&set);
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn duplicate_names_are_reported_once_per_name() {
        let set = AnnotationSet::new(
            vec![ann("a.jpg", vec![]), ann("a.jpg", vec![]), ann("a.jpg", vec![])],
            AnnotationFormat::Voc,
        );
        let report = validate_set(&set);
        assert_eq!(report.counts()[&ViolationKind::DuplicateImageName], 1);
        assert!(report.violations[0].message.contains("3 times"));
    }

    #[test]
    fn out_of_image_box_is_reported() {
        let set = AnnotationSet::new(
            vec![ann("a.jpg", vec![obj(50.0, 50.0), obj(500.0, 50.0)])],
            AnnotationFormat::RoLabelImg,
        );
        let report = validate_set(&set);
        assert_eq!(report.counts()[&ViolationKind::OutOfImage], 1);
        assert!(report.violations[0].location.contains("object 1"));
    }

    #[test]
    fn box_straddling_the_border_is_fine() {
        // envelope pokes past the left edge but still intersects the image
        let set = AnnotationSet::new(
            vec![ann("a.jpg", vec![obj(1.0, 50.0)])],
            AnnotationFormat::RoLabelImg,
        );
        assert!(validate_set(&set).is_clean());
    }

    #[test]
    fn format_tags_round_trip() {
        for f in AnnotationFormat::ALL {
            assert_eq!(AnnotationFormat::from_tag(f.tag()), Some(f));
        }
        assert_eq!(AnnotationFormat::from_tag("VOC"), Some(AnnotationFormat::Voc));
        assert_eq!(AnnotationFormat::from_tag("coco"), None);
    }
}
