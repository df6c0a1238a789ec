//! roLabelImg XML: rotated boxes with the angle stored in radians.
//!
//! ```xml
//! <annotation>
//!   <filename>img1.jpg</filename>
//!   <size><width>200</width><height>100</height><depth>3</depth></size>
//!   <object>
//!     <name>gun</name>
//!     <robndbox>
//!       <cx>100.0</cx><cy>50.0</cy><w>40.0</w><h>10.0</h>
//!       <angle>0.785398163</angle>
//!     </robndbox>
//!   </object>
//! </annotation>
//! ```
//!
//! Angles are converted to degrees and wrapped into `[0, 180)` on ingest.
//! Unknown elements are ignored, so files written by roLabelImg itself
//! (with `<pose>`, `<truncated>`, and friends) parse fine.

use super::xml::{child, child_dim, child_f64, child_text, escape, parse_document, write_tag};
use super::{
    Annotation, AnnotatedObject, ParseError, ParseMode, Parsed, Violation, ViolationKind,
};
use crate::geometry::OrientedBox;
use crate::targets::WeaponClass;
use std::fmt::Write;

pub fn parse_rolabelimg(xml: &str, mode: ParseMode) -> Result<Parsed, ParseError> {
    let doc = parse_document(xml)?;
    let root = root(&doc)?;
    let image_name = child_text(root, "filename", "under <annotation>")?.to_string();
    let size = child(root, "size", "under <annotation>")?;
    let image_width = child_dim(size, "width", "in <size>")?;
    let image_height = child_dim(size, "height", "in <size>")?;

    let mut objects = Vec::new();
    let mut skipped = Vec::new();
    for (index, node) in root.children().filter(|c| c.has_tag_name("object")).enumerate() {
        let context = format!("in object {index}");
        match parse_object(node, &context) {
            Ok(obj) => objects.push(obj),
            Err(e) => lenient_skip(mode, &mut skipped, &image_name, index, e)?,
        }
    }
    Ok(Parsed {
        annotation: Annotation {
            image_name,
            image_width,
            image_height,
            objects,
        },
        skipped,
    })
}

fn root<'a, 'd>(doc: &'a roxmltree::Document<'d>) -> Result<roxmltree::Node<'a, 'd>, ParseError> {
    super::xml::root_element(doc, "annotation")
}

fn parse_object(node: roxmltree::Node, context: &str) -> Result<AnnotatedObject, ParseError> {
    let name = child_text(node, "name", context)?;
    let class = match WeaponClass::from_name(name) {
        Some(c @ (WeaponClass::Gun | WeaponClass::Pistol)) => c,
        _ => {
            return Err(ParseError::UnknownClass {
                name: name.to_string(),
                context: context.to_string(),
            })
        }
    };
    let rb = child(node, "robndbox", context)?;
    let cx = child_f64(rb, "cx", context)?;
    let cy = child_f64(rb, "cy", context)?;
    let w = child_f64(rb, "w", context)?;
    let h = child_f64(rb, "h", context)?;
    let angle_rad = child_f64(rb, "angle", context)?;
    let bbox = OrientedBox::new(cx, cy, w, h, angle_rad.to_degrees()).map_err(|source| {
        ParseError::Geometry {
            context: context.to_string(),
            source,
        }
    })?;
    Ok(AnnotatedObject { class, bbox })
}

/// In lenient mode the object error becomes a recorded skip; in strict mode
/// it aborts the parse.
pub(super) fn lenient_skip(
    mode: ParseMode,
    skipped: &mut Vec<Violation>,
    image_name: &str,
    index: usize,
    error: ParseError,
) -> Result<(), ParseError> {
    if mode == ParseMode::Strict {
        return Err(error);
    }
    let kind = match &error {
        ParseError::UnknownClass { .. } => ViolationKind::UnknownClass,
        ParseError::Geometry { .. } => ViolationKind::NonPositiveSize,
        ParseError::AngleClassRange { .. } => ViolationKind::AngleOutOfRange,
        ParseError::OutOfRange { .. } => ViolationKind::OutOfImage,
        _ => ViolationKind::Malformed,
    };
    skipped.push(Violation {
        kind,
        location: format!("{image_name} object {index}"),
        message: error.to_string(),
    });
    Ok(())
}

pub fn serialize_rolabelimg(a: &Annotation) -> String {
    let mut out = String::new();
    out.push_str("<annotation>\n");
    write_tag(&mut out, 2, "filename", escape(&a.image_name));
    out.push_str("  <size>\n");
    write_tag(&mut out, 4, "width", a.image_width);
    write_tag(&mut out, 4, "height", a.image_height);
    write_tag(&mut out, 4, "depth", 3);
    out.push_str("  </size>\n");
    for obj in &a.objects {
        out.push_str("  <object>\n");
        write_tag(&mut out, 4, "name", obj.class.name());
        write_tag(&mut out, 4, "type", "robndbox");
        out.push_str("    <robndbox>\n");
        let b = &obj.bbox;
        let _ = writeln!(out, "      <cx>{:.6}</cx>", b.cx());
        let _ = writeln!(out, "      <cy>{:.6}</cy>", b.cy());
        let _ = writeln!(out, "      <w>{:.6}</w>", b.w());
        let _ = writeln!(out, "      <h>{:.6}</h>", b.h());
        // radians need nine decimals to hold a millionth of a degree
        let _ = writeln!(out, "      <angle>{:.9}</angle>", b.theta_deg().to_radians());
        out.push_str("    </robndbox>\n");
        out.push_str("  </object>\n");
    }
    out.push_str("</annotation>\n");
    out
}
