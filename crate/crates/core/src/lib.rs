//! Offline detection of fabricated citations in scientific PDFs.
//!
//! The pipeline extracts reference entries from a PDF ([`extract`]), labels
//! their fields ([`recognize`]), and matches titles against local title
//! databases ([`bibdb`], [`matcher`]). Entries without a match are flagged.

pub mod bibdb;
pub mod extract;
pub mod highlight;
pub mod matcher;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod recognize;
pub mod report;
pub mod synth;

pub use bibdb::{BibDatabase, BibEntry, DbError, DbManifest, PinReport};
pub use extract::{ExtractError, TextLine};
pub use matcher::{find_best_match, normalize_title, similarity, verify, MatchError, MatcherConfig};
pub use model::{BoundingBox, Citation, FieldTag, LabeledSpan, MatchResult, Stage, StageTiming, Status};
pub use pipeline::{DocumentOutcome, PipelineError};
pub use recognize::{Labeler, RecognizeError, RuleLabeler};
pub use report::VerificationReport;
