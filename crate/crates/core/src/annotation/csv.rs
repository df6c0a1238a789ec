//! CSV record layout: the whole annotation set in one file, one row per
//! object.
//!
//! ```text
//! image_name,width,height,x1,y1,x2,y2,class,angle_class
//! img1.jpg,200,100,80,45,120,55,Gun,0
//! ```
//!
//! `(x1, y1, x2, y2)` is the unrotated box extent (center plus or minus
//! half the side lengths) in integer pixels; rotating that rectangle about
//! its center by the class representative angle reconstructs the oriented
//! box. `angle_class` is the 0-based class index, so the format quantizes
//! angles to the representative grid. Rows sharing an `image_name` merge
//! into one annotation.

use super::{Annotation, AnnotatedObject, ParseError, ParseMode, ParsedSet, Violation};
use crate::angle::{bin_angle, representative_angle, AngleClass, AngleScheme, NUM_ANGLE_CLASSES};
use crate::geometry::OrientedBox;
use crate::targets::WeaponClass;

pub const CSV_HEADER: &str = "image_name,width,height,x1,y1,x2,y2,class,angle_class";

pub fn parse_csv_records(text: &str, mode: ParseMode) -> Result<ParsedSet, ParseError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let got = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != CSV_HEADER {
        return Err(ParseError::CsvHeader {
            expected: CSV_HEADER.to_string(),
            got,
        });
    }

    let mut annotations: Vec<Annotation> = Vec::new();
    let mut skipped = Vec::new();
    for record in reader.into_records() {
        let row = match record
            .map_err(ParseError::from)
            .and_then(|r| parse_row(&r))
        {
            Ok(row) => row,
            Err(e) => {
                if mode == ParseMode::Strict {
                    return Err(e);
                }
                skipped.push(Violation {
                    kind: super::ViolationKind::Malformed,
                    location: "csv".to_string(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        match annotations.iter_mut().find(|a| a.image_name == row.image_name) {
            Some(a) => {
                if (a.image_width, a.image_height) != (row.width, row.height) {
                    let e = ParseError::InconsistentSize {
                        line: row.line,
                        name: row.image_name,
                    };
                    if mode == ParseMode::Strict {
                        return Err(e);
                    }
                    skipped.push(Violation {
                        kind: super::ViolationKind::Malformed,
                        location: "csv".to_string(),
                        message: e.to_string(),
                    });
                    continue;
                }
                a.objects.push(row.object);
            }
            None => annotations.push(Annotation {
                image_name: row.image_name,
                image_width: row.width,
                image_height: row.height,
                objects: vec![row.object],
            }),
        }
    }
    Ok(ParsedSet {
        annotations,
        skipped,
    })
}

struct Row {
    image_name: String,
    width: u32,
    height: u32,
    object: AnnotatedObject,
    line: usize,
}

fn parse_row(record: &::csv::StringRecord) -> Result<Row, ParseError> {
    let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
    let context = format!("on row at line {line}");
    let field = |i: usize| record.get(i).unwrap_or("").trim();

    let image_name = field(0).to_string();
    let width = parse_int(field(1), "width", &context)?;
    let height = parse_int(field(2), "height", &context)?;
    if width <= 0 || height <= 0 {
        return Err(ParseError::BadImageSize { width, height });
    }
    let x1 = parse_int(field(3), "x1", &context)?;
    let y1 = parse_int(field(4), "y1", &context)?;
    let x2 = parse_int(field(5), "x2", &context)?;
    let y2 = parse_int(field(6), "y2", &context)?;
    let class = match WeaponClass::from_name(field(7)) {
        Some(c @ (WeaponClass::Gun | WeaponClass::Pistol)) => c,
        _ => {
            return Err(ParseError::UnknownClass {
                name: field(7).to_string(),
                context,
            })
        }
    };
    let angle_class = parse_int(field(8), "angle_class", &context)?;
    if !(0..NUM_ANGLE_CLASSES as i64).contains(&angle_class) {
        return Err(ParseError::AngleClassRange {
            value: angle_class,
            context,
        });
    }
    // both schemes share the representative grid, so no scheme is needed
    // to read a row
    let theta = representative_angle(AngleClass {
        scheme: AngleScheme::Model,
        index: angle_class as usize,
    });
    let bbox = OrientedBox::new(
        (x1 + x2) as f64 / 2.0,
        (y1 + y2) as f64 / 2.0,
        (x2 - x1) as f64,
        (y2 - y1) as f64,
        theta,
    )
    .map_err(|source| ParseError::Geometry {
        context: format!("on row at line {line}"),
        source,
    })?;
    Ok(Row {
        image_name,
        width: width as u32,
        height: height as u32,
        object: AnnotatedObject { class, bbox },
        line,
    })
}

fn parse_int(text: &str, name: &str, context: &str) -> Result<i64, ParseError> {
    text.parse::<i64>().map_err(|_| ParseError::InvalidNumber {
        field: name.to_string(),
        value: text.to_string(),
        context: context.to_string(),
    })
}

/// Serializes annotations to CSV rows, binning each angle under `scheme`.
/// The unrotated extent is rounded to whole pixels.
pub fn serialize_csv_records(annotations: &[Annotation], scheme: AngleScheme) -> String {
    let mut writer = ::csv::Writer::from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER.split(','))
        .expect("write to memory");
    for a in annotations {
        for obj in &a.objects {
            let b = &obj.bbox;
            let x1 = (b.cx() - b.w() / 2.0).round() as i64;
            let y1 = (b.cy() - b.h() / 2.0).round() as i64;
            let x2 = (b.cx() + b.w() / 2.0).round() as i64;
            let y2 = (b.cy() + b.h() / 2.0).round() as i64;
            let class = match obj.class {
                WeaponClass::Gun => "Gun",
                _ => "Pistol",
            };
            let index = bin_angle(b.theta_deg(), scheme).index;
            writer
                .write_record([
                    a.image_name.as_str(),
                    &a.image_width.to_string(),
                    &a.image_height.to_string(),
                    &x1.to_string(),
                    &y1.to_string(),
                    &x2.to_string(),
                    &y2.to_string(),
                    class,
                    &index.to_string(),
                ])
                .expect("write to memory");
        }
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("valid utf8")
}
