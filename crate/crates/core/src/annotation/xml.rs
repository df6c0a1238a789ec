//! Small helpers shared by the XML-based parsers and serializers.

use super::ParseError;
use roxmltree::{Document, Node};
use std::borrow::Cow;
use std::fmt::Write;

pub(super) fn parse_document(text: &str) -> Result<Document<'_>, ParseError> {
    Document::parse(text).map_err(|e| {
        let pos = e.pos();
        ParseError::Xml {
            line: pos.row,
            col: pos.col,
            msg: e.to_string(),
        }
    })
}

pub(super) fn root_element<'a, 'd>(
    doc: &'a Document<'d>,
    expected: &str,
) -> Result<Node<'a, 'd>, ParseError> {
    let root = doc.root_element();
    if root.has_tag_name(expected) {
        Ok(root)
    } else {
        Err(ParseError::MissingElement {
            element: expected.to_string(),
            context: format!("at the document root (found <{}>)", root.tag_name().name()),
        })
    }
}

pub(super) fn child<'a, 'd>(
    node: Node<'a, 'd>,
    name: &str,
    context: &str,
) -> Result<Node<'a, 'd>, ParseError> {
    node.children()
        .find(|c| c.has_tag_name(name))
        .ok_or_else(|| ParseError::MissingElement {
            element: name.to_string(),
            context: context.to_string(),
        })
}

pub(super) fn child_text<'a>(
    node: Node<'a, '_>,
    name: &str,
    context: &str,
) -> Result<&'a str, ParseError> {
    Ok(child(node, name, context)?.text().unwrap_or("").trim())
}

pub(super) fn child_f64(node: Node<'_, '_>, name: &str, context: &str) -> Result<f64, ParseError> {
    let text = child_text(node, name, context)?;
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::InvalidNumber {
            field: name.to_string(),
            value: text.to_string(),
            context: context.to_string(),
        })
}

/// Parses a positive pixel dimension; tolerates a decimal point as long as
/// the value is integral.
pub(super) fn child_dim(node: Node<'_, '_>, name: &str, context: &str) -> Result<u32, ParseError> {
    let v = child_f64(node, name, context)?;
    if v.fract() == 0.0 && v >= 1.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(ParseError::BadImageSize {
            width: v as i64,
            height: v as i64,
        })
    }
}

pub(super) fn escape(text: &str) -> Cow<'_, str> {
    if !text.contains(['&', '<', '>', '"', '\'']) {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    Cow::Owned(out)
}

pub(super) fn write_tag(out: &mut String, indent: usize, name: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{:1$}<{name}>{value}</{name}>", "", indent);
}
