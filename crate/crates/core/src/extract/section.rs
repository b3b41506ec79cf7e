use std::sync::LazyLock;

use regex::Regex;

use super::{ExtractError, ReferenceRegion, TextLine};

static HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:(?:\d+(?:\.\d+)*|[IVXLC]+)\.?\s+)?(?:references|bibliography|reference)$").unwrap()
});

static END_WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:(?:[A-Z]|\d+(?:\.\d+)*)\.?\s+)?(?:appendix|appendices|supplementary)\b").unwrap()
});

// "A Proofs", "B.2 Hyperparameters"
static APPENDIX_LETTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[A-Z](?:\.\d+)*\.?\s+\p{Lu}").unwrap());

const MAX_HEADING_CHARS: usize = 80;
/// Letter-style appendix headings must be set at least this much taller than body lines.
const HEADING_HEIGHT_RATIO: f64 = 1.05;

pub fn is_reference_heading(text: &str) -> bool {
    HEADING.is_match(text.trim())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn is_end_heading(line: &TextLine, body_height: f64) -> bool {
    let text = line.text.trim();
    if text.chars().count() > MAX_HEADING_CHARS || text.ends_with('.') || text.ends_with(',') {
        return false;
    }
    if END_WORD.is_match(text) {
        return true;
    }
    APPENDIX_LETTER.is_match(text) && line.bbox.height() >= HEADING_HEIGHT_RATIO * body_height
}

/// Reference lines: after the last reference heading, up to the first
/// appendix-style heading.
pub fn locate_reference_section(lines: &[TextLine]) -> Result<ReferenceRegion, ExtractError> {
    let start = lines.iter().rposition(|l| is_reference_heading(&l.text)).ok_or(ExtractError::NoReferenceSection)?;
    let after = &lines[start + 1..];
    let body_height = median(after.iter().map(|l| l.bbox.height()).collect());
    let end = after.iter().position(|l| is_end_heading(l, body_height)).unwrap_or(after.len());
    Ok(ReferenceRegion { heading_line: lines[start].clone(), lines: after[..end].to_vec() })
}
