//! YOLO label text: one object per line,
//! `class_idx cx cy w h [angle_norm]`, all box values normalized by the
//! image size. Class 0 is gun, class 1 is pistol. The optional sixth token
//! is the angle regression value `theta / 180`; lines without it mean an
//! axis-aligned box.

use super::rolabelimg::lenient_skip;
use super::{Annotation, AnnotatedObject, ParseError, ParseMode, Parsed};
use crate::angle::{decode_angle_regression, encode_angle_regression};
use crate::geometry::OrientedBox;
use crate::targets::WeaponClass;
use std::fmt::Write;

/// Parses YOLO label lines. The text carries neither image name nor size,
/// so both come from the caller (file stem and sidecar, or explicit flags).
pub fn parse_yolo(
    image_name: &str,
    image_width: u32,
    image_height: u32,
    text: &str,
    mode: ParseMode,
) -> Result<Parsed, ParseError> {
    if image_width == 0 || image_height == 0 {
        return Err(ParseError::BadImageSize {
            width: image_width as i64,
            height: image_height as i64,
        });
    }
    let mut objects = Vec::new();
    let mut skipped = Vec::new();
    let mut index = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, line_no + 1, image_width, image_height) {
            Ok(obj) => objects.push(obj),
            Err(e) => lenient_skip(mode, &mut skipped, image_name, index, e)?,
        }
        index += 1;
    }
    Ok(Parsed {
        annotation: Annotation {
            image_name: image_name.to_string(),
            image_width,
            image_height,
            objects,
        },
        skipped,
    })
}

fn parse_line(
    line: &str,
    line_no: usize,
    image_width: u32,
    image_height: u32,
) -> Result<AnnotatedObject, ParseError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 5 && tokens.len() != 6 {
        return Err(ParseError::TokenCount {
            line: line_no,
            got: tokens.len(),
        });
    }
    let class = match tokens[0] {
        "0" => WeaponClass::Gun,
        "1" => WeaponClass::Pistol,
        other => {
            return Err(ParseError::UnknownClass {
                name: other.to_string(),
                context: format!("on line {line_no} (expected 0 or 1)"),
            })
        }
    };
    let names = ["cx", "cy", "w", "h", "angle"];
    let mut values = [0.0f64; 5];
    for (i, tok) in tokens[1..].iter().enumerate() {
        let v: f64 = tok.parse().map_err(|_| ParseError::InvalidNumber {
            field: names[i].to_string(),
            value: tok.to_string(),
            context: format!("on line {line_no}"),
        })?;
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(ParseError::OutOfRange {
                line: line_no,
                field: names[i].to_string(),
                value: v,
            });
        }
        values[i] = v;
    }
    let theta_deg = if tokens.len() == 6 {
        decode_angle_regression(values[4])
    } else {
        0.0
    };
    let w = image_width as f64;
    let h = image_height as f64;
    let bbox = OrientedBox::new(values[0] * w, values[1] * h, values[2] * w, values[3] * h, theta_deg)
        .map_err(|source| ParseError::Geometry {
            context: format!("on line {line_no}"),
            source,
        })?;
    Ok(AnnotatedObject { class, bbox })
}

/// Writes label lines with the angle token always present. Twelve decimals
/// keep a millionth of a pixel through the normalization, even for large
/// images.
pub fn serialize_yolo(a: &Annotation) -> String {
    let w = a.image_width as f64;
    let h = a.image_height as f64;
    let mut out = String::new();
    for obj in &a.objects {
        let b = &obj.bbox;
        let class_idx = match obj.class {
            WeaponClass::Gun => 0,
            _ => 1,
        };
        let _ = writeln!(
            out,
            "{} {:.12} {:.12} {:.12} {:.12} {:.12}",
            class_idx,
            b.cx() / w,
            b.cy() / h,
            b.w() / w,
            b.h() / h,
            encode_angle_regression(b.theta_deg()),
        );
    }
    out
}
