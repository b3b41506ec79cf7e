//! Sequence labeling of citation strings into bibliographic fields.

mod linear;
mod rules;
mod token;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{char_slice, Citation, FieldTag, LabeledSpan, Status};

pub use linear::LinearLabeler;
pub use rules::RuleLabeler;
pub use token::{is_year, tokenize, CaseShape, DigitShape, PunctShape, Shape, Token};

#[derive(Debug, Error)]
pub enum RecognizeError {
    #[error("labeler model unavailable at {path}: {reason}")]
    ModelUnavailable { path: PathBuf, reason: String },
    #[error("labeler returned {tags} tags for {tokens} tokens")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("citation {index} has status {status}, expected extracted")]
    NotExtracted { index: usize, status: &'static str },
    #[error("unknown labeler {0:?} (expected \"rules\" or \"linear:<weights.tsv>\")")]
    UnknownLabeler(String),
    #[error("citation {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<RecognizeError>,
    },
}

/// A token tagger. Implementations must be shareable across worker threads.
pub trait Labeler: Send + Sync {
    fn name(&self) -> &str;
    fn version(&self) -> &str;
    /// Exactly one tag per token.
    fn label(&self, tokens: &[Token]) -> Result<Vec<FieldTag>, RecognizeError>;
}

/// Runs the labeler and checks the one-tag-per-token contract.
pub fn label_tokens(tokens: &[Token], labeler: &dyn Labeler) -> Result<Vec<FieldTag>, RecognizeError> {
    let tags = labeler.label(tokens)?;
    if tags.len() != tokens.len() {
        return Err(RecognizeError::LengthMismatch { tokens: tokens.len(), tags: tags.len() });
    }
    Ok(tags)
}

/// Turns per-token tags into spans, fields and the title, and advances status.
///
/// The title is the longest title run counted in tokens; the earliest run wins ties.
pub fn assemble_fields(mut c: Citation, tags: &[FieldTag]) -> Result<Citation, RecognizeError> {
    let tokens = tokenize(&c.raw_text);
    if tags.len() != tokens.len() {
        return Err(RecognizeError::LengthMismatch { tokens: tokens.len(), tags: tags.len() });
    }
    let mut spans = Vec::new();
    let mut best_title: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < tags.len() {
        let tag = tags[i];
        let mut j = i + 1;
        while j < tags.len() && tags[j] == tag {
            j += 1;
        }
        if tag != FieldTag::Other {
            let (start, end) = (tokens[i].start_char, tokens[j - 1].end_char);
            spans.push(LabeledSpan {
                tag,
                start_char: start,
                end_char: end,
                text: char_slice(&c.raw_text, start, end).to_string(),
            });
            if tag == FieldTag::Title && best_title.is_none_or(|(_, len)| j - i > len) {
                best_title = Some((spans.len() - 1, j - i));
            }
        }
        i = j;
    }

    let mut fields: BTreeMap<FieldTag, String> = BTreeMap::new();
    for s in &spans {
        fields
            .entry(s.tag)
            .and_modify(|v| {
                v.push(' ');
                v.push_str(&s.text);
            })
            .or_insert_with(|| s.text.clone());
    }
    c.title = best_title.map(|(k, _)| spans[k].text.clone()).unwrap_or_default();
    c.spans = spans;
    c.fields = fields;
    c.advance(if c.title.is_empty() { Status::Unverifiable } else { Status::Recognized });
    Ok(c)
}

/// Recognizes one extracted citation.
pub fn parse(c: Citation, labeler: &dyn Labeler) -> Result<Citation, RecognizeError> {
    if c.status() != Status::Extracted {
        return Err(RecognizeError::NotExtracted { index: 0, status: c.status().as_str() });
    }
    let tokens = tokenize(&c.raw_text);
    let tags = label_tokens(&tokens, labeler)?;
    assemble_fields(c, &tags)
}

/// Order-preserving parallel [`parse`]; reports the first failing index.
pub fn parse_batch(citations: Vec<Citation>, labeler: &dyn Labeler) -> Result<Vec<Citation>, RecognizeError> {
    if let Some((index, c)) = citations.iter().enumerate().find(|(_, c)| c.status() != Status::Extracted) {
        return Err(RecognizeError::NotExtracted { index, status: c.status().as_str() });
    }
    let results: Vec<Result<Citation, RecognizeError>> = citations.into_par_iter().map(|c| parse(c, labeler)).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|e| RecognizeError::Batch { index, source: Box::new(e) }))
        .collect()
}

/// Resolves a labeler spec: `rules`, or `linear:<path to weights>`.
pub fn labeler_by_name(spec: &str) -> Result<Box<dyn Labeler>, RecognizeError> {
    match spec.split_once(':') {
        None if spec == "rules" => Ok(Box::new(RuleLabeler)),
        Some(("linear", path)) => Ok(Box::new(LinearLabeler::load(path.as_ref())?)),
        _ => Err(RecognizeError::UnknownLabeler(spec.to_string())),
    }
}
