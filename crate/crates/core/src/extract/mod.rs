//! PDF to citations: positioned lines, the reference region, and entries.

mod layout;
mod pdf;
mod section;
mod segment;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BoundingBox, Citation};

pub use section::{is_reference_heading, locate_reference_section};
pub use segment::{entry_starts, join_line, segment_entries, segment_lines, Strategy, HANGING_INDENT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("cannot read {path}: {reason}")]
    UnreadableDocument { path: String, reason: String },
    #[error("{path} has no extractable text (scanned or image-only PDF; OCR is not supported)")]
    EmptyDocument { path: String },
    #[error("no reference section heading found")]
    NoReferenceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub page_index: usize,
    pub bbox: BoundingBox,
    pub text: String,
    /// 0 for single-column pages and the left column, 1 for the right column.
    pub column_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRegion {
    pub lines: Vec<TextLine>,
    pub heading_line: TextLine,
}

/// All lines of a document plus the page geometry needed to validate boxes.
#[derive(Debug, Clone)]
pub struct ExtractedDocument {
    pub media_boxes: Vec<[f64; 4]>,
    pub lines: Vec<TextLine>,
}

impl ExtractedDocument {
    pub fn page_count(&self) -> usize {
        self.media_boxes.len()
    }

    /// True when `b` lies on an existing page and inside its media box.
    pub fn contains(&self, b: &BoundingBox) -> bool {
        b.is_well_formed() && self.media_boxes.get(b.page_index).is_some_and(|m| b.within(*m))
    }
}

fn unreadable(path: &str, reason: impl ToString) -> ExtractError {
    ExtractError::UnreadableDocument { path: path.to_string(), reason: reason.to_string() }
}

/// Parses PDF bytes; `label` names the document in errors.
pub fn read_document_bytes(bytes: &[u8], label: &str) -> Result<ExtractedDocument, ExtractError> {
    let doc = lopdf::Document::load_mem(bytes).map_err(|e| unreadable(label, e))?;
    if doc.is_encrypted() {
        return Err(unreadable(label, "document is encrypted and requires a password"));
    }
    let pages = pdf::read_pages(&doc);
    if pages.is_empty() {
        return Err(unreadable(label, "document has no pages"));
    }
    if pages.iter().all(|p| p.glyphs.iter().all(|g| g.text.trim().is_empty())) {
        return Err(ExtractError::EmptyDocument { path: label.to_string() });
    }
    let media_boxes = pages.iter().map(|p| p.media_box).collect();
    Ok(ExtractedDocument { media_boxes, lines: layout::build_lines(&pages) })
}

pub fn read_document(path: &Path) -> Result<ExtractedDocument, ExtractError> {
    let label = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| unreadable(&label, e))?;
    read_document_bytes(&bytes, &label)
}

/// Text lines of the whole document in reading order.
pub fn extract_document(path: &Path) -> Result<Vec<TextLine>, ExtractError> {
    read_document(path).map(|d| d.lines)
}

/// Convenience: lines, region and entries in one call.
pub fn extract_references(path: &Path) -> Result<Vec<Citation>, ExtractError> {
    let lines = extract_document(path)?;
    let region = locate_reference_section(&lines)?;
    Ok(segment_entries(&region))
}
