//! Highlight annotations over citation bounding boxes.

use std::path::{Path, PathBuf};

use lopdf::{dictionary, Document, Object, ObjectId, Stream, StringFormat};
use thiserror::Error;

use crate::model::{BoundingBox, Citation};

/// Yellow for hallucination candidates.
pub const FLAGGED_COLOR: [f32; 3] = [1.0, 0.85, 0.0];
/// Light blue for entries with no recognized title.
pub const UNVERIFIABLE_COLOR: [f32; 3] = [0.35, 0.7, 1.0];
pub const OPACITY: f32 = 0.35;
const AUTHOR: &str = "citecheck";

#[derive(Debug, Error)]
pub enum AnnotationFailure {
    #[error("cannot read {path}: {reason}")]
    Source { path: PathBuf, reason: String },
    #[error("bounding box references page {page} but the document has {pages} pages")]
    InvalidPage { page: usize, pages: usize },
    #[error("cannot attach annotation to page {page}: {reason}")]
    Page { page: usize, reason: String },
    #[error("cannot write {path}: {reason}")]
    Write { path: PathBuf, reason: String },
}

/// A highlight read back from a PDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Highlight {
    pub page_index: usize,
    pub rect: [f64; 4],
    pub color: [f32; 3],
    pub contents: String,
}

fn text_string(s: &str) -> Object {
    if s.is_ascii() {
        Object::String(s.as_bytes().to_vec(), StringFormat::Literal)
    } else {
        let mut bytes = vec![0xFE, 0xFF];
        bytes.extend(s.encode_utf16().flat_map(u16::to_be_bytes));
        Object::String(bytes, StringFormat::Hexadecimal)
    }
}

fn decode_text_string(bytes: &[u8]) -> String {
    match bytes.strip_prefix(&[0xFE, 0xFF]) {
        Some(rest) => {
            let units: Vec<u16> = rest.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
            String::from_utf16_lossy(&units)
        }
        None => bytes.iter().map(|&b| b as char).collect(),
    }
}

fn reals(values: &[f64]) -> Object {
    Object::Array(values.iter().map(|&v| Object::Real(v as f32)).collect())
}

fn add_highlight(
    doc: &mut Document,
    page_id: ObjectId,
    page: usize,
    b: &BoundingBox,
    color: [f32; 3],
    note: &str,
) -> Result<(), AnnotationFailure> {
    let (w, h) = (b.width(), b.height());
    let appearance = format!("q /GS0 gs {} {} {} rg 0 0 {:.3} {:.3} re f Q", color[0], color[1], color[2], w, h);
    let ap = doc.add_object(Stream::new(
        dictionary! {
            "Type" => "XObject",
            "Subtype" => "Form",
            "BBox" => reals(&[0.0, 0.0, w, h]),
            "Matrix" => reals(&[1.0, 0.0, 0.0, 1.0, b.x0, b.y0]),
            "Resources" => dictionary! {
                "ExtGState" => dictionary! {
                    "GS0" => dictionary! { "Type" => "ExtGState", "ca" => OPACITY, "CA" => OPACITY, "BM" => "Multiply" },
                },
            },
        },
        appearance.into_bytes(),
    ));
    let annot = doc.add_object(dictionary! {
        "Type" => "Annot",
        "Subtype" => "Highlight",
        "Rect" => reals(&[b.x0, b.y0, b.x1, b.y1]),
        "QuadPoints" => reals(&[b.x0, b.y1, b.x1, b.y1, b.x0, b.y0, b.x1, b.y0]),
        "C" => Object::Array(color.iter().map(|&c| Object::Real(c)).collect()),
        "CA" => OPACITY,
        "F" => 4,
        "P" => page_id,
        "T" => text_string(AUTHOR),
        "Contents" => text_string(note),
        "AP" => dictionary! { "N" => ap },
    });

    let page_err = |reason: String| AnnotationFailure::Page { page, reason };
    let existing = doc.get_dictionary(page_id).map_err(|e| page_err(e.to_string()))?.get(b"Annots").ok().cloned();
    match existing {
        Some(Object::Reference(arr_id)) => {
            doc.get_object_mut(arr_id)
                .and_then(Object::as_array_mut)
                .map_err(|e| page_err(e.to_string()))?
                .push(Object::Reference(annot));
        }
        Some(Object::Array(mut arr)) => {
            arr.push(Object::Reference(annot));
            doc.get_dictionary_mut(page_id).map_err(|e| page_err(e.to_string()))?.set("Annots", arr);
        }
        _ => {
            doc.get_dictionary_mut(page_id)
                .map_err(|e| page_err(e.to_string()))?
                .set("Annots", vec![Object::Reference(annot)]);
        }
    }
    Ok(())
}

fn note_for(c: &Citation, unverifiable: bool) -> String {
    if unverifiable {
        "unverifiable: no title recognized".to_string()
    } else {
        let score = c.match_result.as_ref().map_or(0.0, |m| m.score);
        format!("possible hallucinated citation (best similarity {score:.3}): {}", c.title)
    }
}

/// Annotates an in-memory PDF; returns the new bytes and the rectangle count.
pub fn highlight_bytes(
    source: &[u8],
    flagged: &[Citation],
    unverifiable: &[Citation],
) -> Result<(Vec<u8>, usize), AnnotationFailure> {
    let mut doc = Document::load_mem(source)
        .map_err(|e| AnnotationFailure::Source { path: PathBuf::from("<memory>"), reason: e.to_string() })?;
    let pages: Vec<ObjectId> = doc.get_pages().into_values().collect();
    let mut n = 0;
    let groups = [(flagged, FLAGGED_COLOR, false), (unverifiable, UNVERIFIABLE_COLOR, true)];
    for (citations, color, unverif) in groups {
        for c in citations {
            let note = note_for(c, unverif);
            for b in &c.bboxes {
                let page_id = *pages
                    .get(b.page_index)
                    .ok_or(AnnotationFailure::InvalidPage { page: b.page_index, pages: pages.len() })?;
                add_highlight(&mut doc, page_id, b.page_index, b, color, &note)?;
                n += 1;
            }
        }
    }
    let mut out = Vec::new();
    doc.save_to(&mut out)
        .map_err(|e| AnnotationFailure::Write { path: PathBuf::from("<memory>"), reason: e.to_string() })?;
    Ok((out, n))
}

/// Writes a highlighted copy of `source` to `out`. Writes nothing and returns
/// 0 when there is nothing to highlight.
pub fn highlight_pdf(
    source: &Path,
    flagged: &[Citation],
    unverifiable: &[Citation],
    out: &Path,
) -> Result<usize, AnnotationFailure> {
    if flagged.is_empty() && unverifiable.is_empty() {
        return Ok(0);
    }
    let bytes = std::fs::read(source)
        .map_err(|e| AnnotationFailure::Source { path: source.to_path_buf(), reason: e.to_string() })?;
    let (annotated, n) = highlight_bytes(&bytes, flagged, unverifiable).map_err(|e| match e {
        AnnotationFailure::Source { reason, .. } => AnnotationFailure::Source { path: source.to_path_buf(), reason },
        other => other,
    })?;
    std::fs::write(out, annotated)
        .map_err(|e| AnnotationFailure::Write { path: out.to_path_buf(), reason: e.to_string() })?;
    Ok(n)
}

fn number(o: &Object) -> Option<f64> {
    match o {
        Object::Integer(i) => Some(*i as f64),
        Object::Real(r) => Some(*r as f64),
        _ => None,
    }
}

/// Highlight annotations present in a PDF, in page order.
pub fn read_highlights(bytes: &[u8]) -> Result<Vec<Highlight>, lopdf::Error> {
    let doc = Document::load_mem(bytes)?;
    let mut out = Vec::new();
    for (page_index, page_id) in doc.get_pages().into_values().enumerate() {
        let Ok(annots) = doc.get_page_annotations(page_id) else { continue };
        for a in annots {
            if a.get(b"Subtype").and_then(Object::as_name).ok() != Some(b"Highlight".as_slice()) {
                continue;
            }
            let rect: Vec<f64> = a
                .get(b"Rect")
                .and_then(Object::as_array)
                .map(|r| r.iter().filter_map(number).collect())
                .unwrap_or_default();
            let color: Vec<f32> = a
                .get(b"C")
                .and_then(Object::as_array)
                .map(|r| r.iter().filter_map(number).map(|v| v as f32).collect())
                .unwrap_or_default();
            let contents = match a.get(b"Contents") {
                Ok(Object::String(s, _)) => decode_text_string(s),
                _ => String::new(),
            };
            if let (&[x0, y0, x1, y1], &[r, g, b]) = (rect.as_slice(), color.as_slice()) {
                out.push(Highlight { page_index, rect: [x0, y0, x1, y1], color: [r, g, b], contents });
            }
        }
    }
    Ok(out)
}
