//! VOC XML: axis-aligned `<bndbox>` boxes in integer pixels.
//!
//! The format has no orientation, so parsed boxes carry an angle of zero
//! and the serializer writes each object's axis-aligned envelope, rounded
//! to whole pixels.

use super::rolabelimg::lenient_skip;
use super::xml::{child, child_dim, child_f64, child_text, escape, parse_document, write_tag};
use super::{Annotation, AnnotatedObject, ParseError, ParseMode, Parsed};
use crate::geometry::HorizontalBox;
use crate::targets::WeaponClass;

pub fn parse_voc(xml: &str, mode: ParseMode) -> Result<Parsed, ParseError> {
    let doc = parse_document(xml)?;
    let root = super::xml::root_element(&doc, "annotation")?;
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
    let bb = child(node, "bndbox", context)?;
    let xmin = child_f64(bb, "xmin", context)?;
    let ymin = child_f64(bb, "ymin", context)?;
    let xmax = child_f64(bb, "xmax", context)?;
    let ymax = child_f64(bb, "ymax", context)?;
    let hbox = HorizontalBox::new(xmin, ymin, xmax, ymax).map_err(|source| {
        ParseError::Geometry {
            context: context.to_string(),
            source,
        }
    })?;
    Ok(AnnotatedObject {
        class,
        bbox: hbox.to_oriented(),
    })
}

pub fn serialize_voc(a: &Annotation) -> String {
    let mut out = String::new();
    out.push_str("<annotation>\n");
    write_tag(&mut out, 2, "filename", escape(&a.image_name));
    out.push_str("  <size>\n");
    write_tag(&mut out, 4, "width", a.image_width);
    write_tag(&mut out, 4, "height", a.image_height);
    write_tag(&mut out, 4, "depth", 3);
    out.push_str("  </size>\n");
    for obj in &a.objects {
        let env = obj.bbox.envelope();
        out.push_str("  <object>\n");
        write_tag(&mut out, 4, "name", obj.class.name());
        out.push_str("    <bndbox>\n");
        write_tag(&mut out, 6, "xmin", env.xmin().round() as i64);
        write_tag(&mut out, 6, "ymin", env.ymin().round() as i64);
        write_tag(&mut out, 6, "xmax", env.xmax().round() as i64);
        write_tag(&mut out, 6, "ymax", env.ymax().round() as i64);
        out.push_str("    </bndbox>\n");
        out.push_str("  </object>\n");
    }
    out.push_str("</annotation>\n");
    out
}
