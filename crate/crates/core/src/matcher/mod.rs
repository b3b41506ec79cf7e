//! Title matching against bibliographic databases.

mod distance;
pub(crate) mod index;
mod normalize;

use rayon::prelude::*;
use thiserror::Error;

use crate::bibdb::BibDatabase;
use crate::model::{Citation, MatchResult, Status};

pub use distance::{levenshtein, similarity, similarity_from};
pub use normalize::{normalize_title, NORMALIZATION_VERSION};

pub const DEFAULT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_MAX_CANDIDATES: usize = 50_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("database `{0}` has no entries")]
    EmptyDatabase(String),
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("citation {index} has status `{}`; only recognized citations can be matched", status.as_str())]
    NotRecognized { index: usize, status: Status },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatcherConfig {
    pub threshold: f64,
    /// Largest trigram posting volume decoded per query for the q-gram
    /// bound; above it only the cheaper bounds prune. Never changes results,
    /// only the search cost.
    pub max_candidates: usize,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, max_candidates: DEFAULT_MAX_CANDIDATES }
    }
}

impl MatcherConfig {
    pub fn new(threshold: f64) -> Result<Self, MatchError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(MatchError::InvalidThreshold(threshold));
        }
        Ok(Self { threshold, ..Self::default() })
    }

    /// Accepts either a 0-1 similarity or a 0-100 percentage cutoff.
    pub fn from_cutoff(cutoff: f64) -> Result<Self, MatchError> {
        let threshold = if cutoff > 1.0 { cutoff / 100.0 } else { cutoff };
        Self::new(threshold).map_err(|_| MatchError::InvalidThreshold(cutoff))
    }
}

/// Best database entry for `title`, identical to an exhaustive scan with ties
/// going to the smallest entry id.
pub fn find_best_match(title: &str, db: &BibDatabase, cfg: &MatcherConfig) -> Result<MatchResult, MatchError> {
    if db.is_empty() {
        return Err(MatchError::EmptyDatabase(db.name().to_string()));
    }
    let query = normalize_title(title);
    let (score, id) = db
        .index()
        .best(&query, cfg.max_candidates, |i| db.entry(i).normalized_title.as_str())
        .expect("non-empty database always yields a best entry");
    let value = score.value();
    if value >= cfg.threshold {
        let entry = db.entry(id);
        Ok(MatchResult {
            matched: true,
            score: value,
            db_name: db.name().to_string(),
            matched_id: entry.id.clone(),
            matched_title: entry.title.clone(),
        })
    } else {
        Ok(MatchResult::unmatched(db.name(), value))
    }
}

/// Splits recognized citations into (unmatched, matched). Unmatched ones keep
/// the highest-scoring result seen so far across chained databases; matched
/// ones become `verified`.
pub fn verify_partition(
    citations: Vec<Citation>,
    db: &BibDatabase,
    cfg: &MatcherConfig,
) -> Result<(Vec<Citation>, Vec<Citation>), MatchError> {
    if let Some((index, c)) = citations.iter().enumerate().find(|(_, c)| c.status() != Status::Recognized) {
        return Err(MatchError::NotRecognized { index, status: c.status() });
    }
    if citations.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    if db.is_empty() {
        return Err(MatchError::EmptyDatabase(db.name().to_string()));
    }
    let results: Vec<MatchResult> =
        citations.par_iter().map(|c| find_best_match(&c.title, db, cfg)).collect::<Result<_, _>>()?;

    let mut flagged = Vec::new();
    let mut verified = Vec::new();
    for (mut c, result) in citations.into_iter().zip(results) {
        if result.matched {
            c.match_result = Some(result);
            c.advance(Status::Verified);
            verified.push(c);
        } else {
            let keep_previous = c.match_result.as_ref().is_some_and(|prev| prev.score >= result.score);
            if !keep_previous {
                c.match_result = Some(result);
            }
            flagged.push(c);
        }
    }
    Ok((flagged, verified))
}

/// Returns the citations with no match in `db`, in their original order.
pub fn verify(citations: Vec<Citation>, db: &BibDatabase, cfg: &MatcherConfig) -> Result<Vec<Citation>, MatchError> {
    verify_partition(citations, db, cfg).map(|(flagged, _)| flagged)
}
