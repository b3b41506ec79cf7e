//! Shared citation types that flow through extraction, recognition and matching.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// A page-anchored rectangle in PDF user space (points, origin bottom-left).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub page_index: usize,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn new(page_index: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { page_index, x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn is_well_formed(&self) -> bool {
        self.x0.is_finite()
            && self.y0.is_finite()
            && self.x1.is_finite()
            && self.y1.is_finite()
            && self.x0 <= self.x1
            && self.y0 <= self.y1
    }

    /// Checks containment in `media` (`[llx, lly, urx, ury]`) with a 1 pt allowance.
    pub fn within(&self, media: [f64; 4]) -> bool {
        const TOL: f64 = 1.0;
        self.x0 >= media[0] - TOL && self.y0 >= media[1] - TOL && self.x1 <= media[2] + TOL && self.y1 <= media[3] + TOL
    }

    /// Smallest box covering both; page of `self` wins.
    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            page_index: self.page_index,
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }
}

/// Bibliographic field tags. The eighteen field values plus `Other` for
/// tokens outside any field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Author,
    Booktitle,
    Collaboration,
    Date,
    Editor,
    Institution,
    Issue,
    Journal,
    Location,
    Note,
    Pages,
    Publisher,
    Pubnum,
    Series,
    Tech,
    Title,
    Volume,
    Web,
    Other,
}

impl FieldTag {
    pub const ALL: [FieldTag; 19] = [
        FieldTag::Author,
        FieldTag::Booktitle,
        FieldTag::Collaboration,
        FieldTag::Date,
        FieldTag::Editor,
        FieldTag::Institution,
        FieldTag::Issue,
        FieldTag::Journal,
        FieldTag::Location,
        FieldTag::Note,
        FieldTag::Pages,
        FieldTag::Publisher,
        FieldTag::Pubnum,
        FieldTag::Series,
        FieldTag::Tech,
        FieldTag::Title,
        FieldTag::Volume,
        FieldTag::Web,
        FieldTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldTag::Author => "author",
            FieldTag::Booktitle => "booktitle",
            FieldTag::Collaboration => "collaboration",
            FieldTag::Date => "date",
            FieldTag::Editor => "editor",
            FieldTag::Institution => "institution",
            FieldTag::Issue => "issue",
            FieldTag::Journal => "journal",
            FieldTag::Location => "location",
            FieldTag::Note => "note",
            FieldTag::Pages => "pages",
            FieldTag::Publisher => "publisher",
            FieldTag::Pubnum => "pubnum",
            FieldTag::Series => "series",
            FieldTag::Tech => "tech",
            FieldTag::Title => "title",
            FieldTag::Volume => "volume",
            FieldTag::Web => "web",
            FieldTag::Other => "other",
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FieldTag::ALL.iter().copied().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown field tag `{s}`"))
    }
}

/// A contiguous tagged span of `Citation::raw_text`. Offsets count Unicode
/// scalar values, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub tag: FieldTag,
    pub start_char: usize,
    pub end_char: usize,
    pub text: String,
}

impl LabeledSpan {
    pub fn is_valid_for(&self, raw_text: &str) -> bool {
        self.start_char < self.end_char
            && self.end_char <= raw_text.chars().count()
            && char_slice(raw_text, self.start_char, self.end_char) == self.text
    }
}

/// Slices `s` by char offsets. Offsets past the end are clamped.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let from = indices.nth(start).unwrap_or(s.len());
    let to = if end > start { indices.nth(end - start - 1).unwrap_or(s.len()) } else { from };
    &s[from..to]
}

/// Outcome of matching one title against one database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    pub score: f64,
    #[serde(default)]
    pub db_name: String,
    #[serde(default)]
    pub matched_id: String,
    #[serde(default)]
    pub matched_title: String,
}

impl MatchResult {
    pub fn unmatched(db_name: impl Into<String>, score: f64) -> Self {
        Self { matched: false, score, db_name: db_name.into(), matched_id: String::new(), matched_title: String::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Extracted,
    Recognized,
    Verified,
    Unverifiable,
}

impl Status {
    /// Whether moving from `self` to `next` respects the forward-only lifecycle.
    pub fn can_become(self, next: Status) -> bool {
        matches!(
            (self, next),
            (Status::Extracted, Status::Recognized)
                | (Status::Extracted, Status::Unverifiable)
                | (Status::Recognized, Status::Verified)
        ) || self == next
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Extracted => "extracted",
            Status::Recognized => "recognized",
            Status::Verified => "verified",
            Status::Unverifiable => "unverifiable",
        }
    }
}

/// One bibliographic entry and everything learned about it so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Citation {
    pub raw_text: String,
    #[serde(default)]
    pub bboxes: Vec<BoundingBox>,
    #[serde(default)]
    pub spans: Vec<LabeledSpan>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub fields: BTreeMap<FieldTag, String>,
    #[serde(default, rename = "match")]
    pub match_result: Option<MatchResult>,
    #[serde(default = "default_status")]
    status: Status,
}

fn default_status() -> Status {
    Status::Extracted
}

impl Citation {
    pub fn new(raw_text: impl Into<String>) -> Self {
        Self {
            raw_text: raw_text.into(),
            bboxes: Vec::new(),
            spans: Vec::new(),
            title: String::new(),
            fields: BTreeMap::new(),
            match_result: None,
            status: Status::Extracted,
        }
    }

    pub fn with_bboxes(mut self, bboxes: Vec<BoundingBox>) -> Self {
        self.bboxes = bboxes;
        self
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// Advances the lifecycle. Panics on a backward transition, which would be
    /// a bug in a pipeline stage.
    pub(crate) fn advance(&mut self, next: Status) {
        assert!(self.status.can_become(next), "illegal citation status transition {:?} -> {:?}", self.status, next);
        self.status = next;
    }

    pub fn field(&self, tag: FieldTag) -> Option<&str> {
        self.fields.get(&tag).map(String::as_str)
    }

    /// Serializes into the flat record used by reports.
    pub fn to_record(&self) -> Map<String, Value> {
        match serde_json::to_value(self) {
            Ok(Value::Object(map)) => map,
            _ => unreachable!("Citation always serializes to an object"),
        }
    }
}

const RECORD_KEYS: [&str; 7] = ["raw_text", "bboxes", "spans", "title", "fields", "match", "status"];

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("record is missing required field `{0}`")]
    MissingField(&'static str),
    #[error("record carries unknown field `{0}`")]
    UnknownField(String),
    #[error("record field is invalid: {0}")]
    InvalidField(String),
}

/// Builds a citation from a flat key-value record, rejecting unknown keys.
pub fn citation_from_record(record: &Map<String, Value>) -> Result<Citation, RecordError> {
    if let Some(key) = record.keys().find(|k| !RECORD_KEYS.contains(&k.as_str())) {
        return Err(RecordError::UnknownField(key.clone()));
    }
    match record.get("raw_text") {
        Some(Value::String(s)) if !s.is_empty() => {}
        Some(Value::String(_)) | None | Some(Value::Null) => return Err(RecordError::MissingField("raw_text")),
        Some(other) => return Err(RecordError::InvalidField(format!("raw_text must be a string, got {other}"))),
    }
    let citation: Citation =
        serde_json::from_value(Value::Object(record.clone())).map_err(|e| RecordError::InvalidField(e.to_string()))?;

    if citation.raw_text.contains(['\n', '\r']) {
        return Err(RecordError::InvalidField("raw_text contains a line break".into()));
    }
    if let Some(b) = citation.bboxes.iter().find(|b| !b.is_well_formed()) {
        return Err(RecordError::InvalidField(format!("malformed bounding box {b:?}")));
    }
    if let Some(s) = citation.spans.iter().find(|s| !s.is_valid_for(&citation.raw_text)) {
        return Err(RecordError::InvalidField(format!(
            "span [{}, {}) does not re-slice raw_text",
            s.start_char, s.end_char
        )));
    }
    if let Some(m) = &citation.match_result {
        if !(0.0..=1.0).contains(&m.score) {
            return Err(RecordError::InvalidField(format!("match score {} outside [0, 1]", m.score)));
        }
        if !m.matched && (!m.matched_id.is_empty() || !m.matched_title.is_empty()) {
            return Err(RecordError::InvalidField("unmatched result carries a matched entry".into()));
        }
    }
    Ok(citation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Verbosity {
    /// Raw text only.
    Minimal,
    /// Author/title record as printed for flagged citations.
    #[default]
    Summary,
    /// Every known field, the match outcome and the bounding boxes.
    Full,
}

/// Renders the author/title record shown for flagged citations.
pub fn summary_record(c: &Citation) -> String {
    let author = c.field(FieldTag::Author).unwrap_or("");
    format!("{{\"author\": {}, \"title\": {}}}", Value::String(author.to_string()), Value::String(c.title.clone()))
}

/// Deterministic human-readable rendering of a citation.
pub fn render_citation(c: &Citation, verbosity: Verbosity) -> String {
    match verbosity {
        Verbosity::Minimal => c.raw_text.clone(),
        Verbosity::Summary => {
            if c.title.is_empty() && c.fields.is_empty() {
                c.raw_text.clone()
            } else {
                summary_record(c)
            }
        }
        Verbosity::Full => {
            let mut out = String::new();
            let _ = writeln!(out, "raw: {}", c.raw_text);
            let _ = writeln!(out, "status: {}", c.status.as_str());
            if !c.title.is_empty() {
                let _ = writeln!(out, "title: {}", c.title);
            }
            if let Some(author) = c.field(FieldTag::Author) {
                let _ = writeln!(out, "author: {author}");
            }
            for (tag, text) in &c.fields {
                if matches!(tag, FieldTag::Title | FieldTag::Author) {
                    continue;
                }
                let _ = writeln!(out, "{tag}: {text}");
            }
            if let Some(m) = &c.match_result {
                if m.matched {
                    let _ =
                        writeln!(out, "match: {:.4} in {} ({}: {})", m.score, m.db_name, m.matched_id, m.matched_title);
                } else {
                    let _ = writeln!(out, "match: none (best score {:.4} in {})", m.score, m.db_name);
                }
            }
            for b in &c.bboxes {
                let _ =
                    writeln!(out, "bbox: page {} [{:.2}, {:.2}, {:.2}, {:.2}]", b.page_index, b.x0, b.y0, b.x1, b.y1);
            }
            out.pop();
            out
        }
    }
}

/// Pipeline stages timed by the stopwatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Extractor,
    Recognizer,
    Matcher,
    Total,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Extractor, Stage::Recognizer, Stage::Matcher, Stage::Total];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Extractor => "extractor",
            Stage::Recognizer => "recognizer",
            Stage::Matcher => "matcher",
            Stage::Total => "total",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub elapsed_ms: f64,
    pub unit_count: usize,
}
