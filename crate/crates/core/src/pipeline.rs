//! One document through extraction, recognition and chained matching.

use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::bibdb::BibDatabase;
use crate::extract::{self, ExtractError};
use crate::matcher::{verify_partition, MatchError, MatcherConfig};
use crate::model::{Citation, Stage, StageTiming, Status};
use crate::recognize::{parse_batch, Labeler, RecognizeError};
use crate::report::stopwatch;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Recognize(#[from] RecognizeError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("no bibliographic database configured")]
    NoDatabase,
}

#[derive(Debug, Clone)]
pub struct DocumentOutcome {
    pub input: String,
    pub extracted: usize,
    /// Recognized citations with no match in any database, in document order.
    pub flagged: Vec<Citation>,
    /// Citations without a recognized title.
    pub unverifiable: Vec<Citation>,
    pub verified: Vec<Citation>,
    pub timings: Vec<StageTiming>,
}

impl DocumentOutcome {
    pub fn is_all_clear(&self) -> bool {
        self.flagged.is_empty() && self.unverifiable.is_empty()
    }
}

/// Flagged, unverifiable and verified citations, with recognizer and matcher
/// timings.
pub type Checked = (Vec<Citation>, Vec<Citation>, Vec<Citation>, [StageTiming; 2]);

/// Recognizes and matches already extracted citations. Databases are tried in
/// order; a citation is flagged only if none of them matches it.
pub fn check_citations(
    citations: Vec<Citation>,
    dbs: &[BibDatabase],
    labeler: &dyn Labeler,
    cfg: &MatcherConfig,
) -> Result<Checked, PipelineError> {
    if dbs.is_empty() {
        return Err(PipelineError::NoDatabase);
    }
    let n = citations.len();
    let (parsed, mut t_rec) = stopwatch(Stage::Recognizer, || parse_batch(citations, labeler));
    t_rec.unit_count = n;
    let (recognized, unverifiable): (Vec<Citation>, Vec<Citation>) =
        parsed?.into_iter().partition(|c| c.status() == Status::Recognized);

    let n_rec = recognized.len();
    let (matched, mut t_match) = stopwatch(Stage::Matcher, || {
        let mut pending = recognized;
        let mut verified = Vec::new();
        for db in dbs {
            let (flagged, v) = verify_partition(pending, db, cfg)?;
            verified.extend(v);
            pending = flagged;
        }
        Ok::<_, MatchError>((pending, verified))
    });
    t_match.unit_count = n_rec;
    let (flagged, verified) = matched?;
    Ok((flagged, unverifiable, verified, [t_rec, t_match]))
}

/// Full pipeline over PDF bytes; `label` names the document in errors and reports.
pub fn run_bytes(
    bytes: &[u8],
    label: &str,
    dbs: &[BibDatabase],
    labeler: &dyn Labeler,
    cfg: &MatcherConfig,
) -> Result<DocumentOutcome, PipelineError> {
    let start = Instant::now();
    let (citations, mut t_ext) = stopwatch(Stage::Extractor, || -> Result<Vec<Citation>, ExtractError> {
        let doc = extract::read_document_bytes(bytes, label)?;
        let region = extract::locate_reference_section(&doc.lines)?;
        Ok(extract::segment_entries(&region))
    });
    let citations = citations?;
    t_ext.unit_count = citations.len();
    finish(label, citations, dbs, labeler, cfg, start, t_ext)
}

/// Full pipeline over a PDF file; reading the file counts as extraction time.
pub fn run_path(
    path: &Path,
    dbs: &[BibDatabase],
    labeler: &dyn Labeler,
    cfg: &MatcherConfig,
) -> Result<DocumentOutcome, PipelineError> {
    let start = Instant::now();
    let label = path.display().to_string();
    let (citations, mut t_ext) = stopwatch(Stage::Extractor, || -> Result<Vec<Citation>, ExtractError> {
        let doc = extract::read_document(path)?;
        let region = extract::locate_reference_section(&doc.lines)?;
        Ok(extract::segment_entries(&region))
    });
    let citations = citations?;
    t_ext.unit_count = citations.len();
    finish(&label, citations, dbs, labeler, cfg, start, t_ext)
}

fn finish(
    label: &str,
    citations: Vec<Citation>,
    dbs: &[BibDatabase],
    labeler: &dyn Labeler,
    cfg: &MatcherConfig,
    start: Instant,
    t_ext: StageTiming,
) -> Result<DocumentOutcome, PipelineError> {
    let extracted = citations.len();
    let (flagged, unverifiable, verified, [t_rec, t_match]) = check_citations(citations, dbs, labeler, cfg)?;
    let total =
        StageTiming { stage: Stage::Total, elapsed_ms: start.elapsed().as_secs_f64() * 1000.0, unit_count: extracted };
    Ok(DocumentOutcome {
        input: label.to_string(),
        extracted,
        flagged,
        unverifiable,
        verified,
        timings: vec![t_ext, t_rec, t_match, total],
    })
}
