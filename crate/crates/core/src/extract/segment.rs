use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;

use super::{ReferenceRegion, TextLine};
use crate::model::Citation;

static BRACKET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\[[^\]\s]{1,12}\]").unwrap());
static NUMBERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,3})\.\s").unwrap());
static AUTHOR_START: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\p{Lu}[\p{L}'’\-]+(?:\s+\p{Lu}[\p{L}'’\-]+)*,\s*(?:\p{Lu}\.|\p{Lu}\p{L}+)").unwrap()
});

/// Continuation lines sit at least this far right of the column's hanging margin.
pub const HANGING_INDENT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Bracketed,
    Numbered,
    HangingIndent,
    AuthorYear,
}

fn column_margins(lines: &[TextLine]) -> HashMap<usize, f64> {
    let mut margins: HashMap<usize, f64> = HashMap::new();
    for l in lines {
        let m = margins.entry(l.column_index).or_insert(f64::INFINITY);
        *m = m.min(l.bbox.x0);
    }
    margins
}

fn numbered_starts(lines: &[TextLine]) -> Vec<bool> {
    let mut expected: Option<u32> = None;
    lines
        .iter()
        .map(|l| {
            let Some(n) = NUMBERED.captures(&l.text).and_then(|c| c[1].parse::<u32>().ok()) else {
                return false;
            };
            let ok = match expected {
                None => n <= 1,
                Some(e) => n == e,
            };
            if ok {
                expected = Some(n + 1);
            }
            ok
        })
        .collect()
}

/// Picks the boundary rule and marks which lines open an entry.
pub fn entry_starts(lines: &[TextLine]) -> (Strategy, Vec<bool>) {
    let with_first = |mut starts: Vec<bool>| {
        if let Some(first) = starts.first_mut() {
            *first = true;
        }
        starts
    };

    let bracket: Vec<bool> = lines.iter().map(|l| BRACKET.is_match(&l.text)).collect();
    if bracket.iter().filter(|&&b| b).count() >= 2 {
        return (Strategy::Bracketed, with_first(bracket));
    }
    let numbered = numbered_starts(lines);
    if numbered.iter().filter(|&&b| b).count() >= 2 {
        return (Strategy::Numbered, with_first(numbered));
    }

    let margins = column_margins(lines);
    let indented: Vec<bool> = lines.iter().map(|l| l.bbox.x0 >= margins[&l.column_index] + HANGING_INDENT).collect();
    let n_indented = indented.iter().filter(|&&b| b).count();
    if n_indented > 0 && lines.len() - n_indented >= 2 {
        return (Strategy::HangingIndent, with_first(indented.iter().map(|&i| !i).collect()));
    }

    let starts = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            i == 0 || (lines[i - 1].text.trim_end().ends_with('.') && !indented[i] && AUTHOR_START.is_match(&l.text))
        })
        .collect();
    (Strategy::AuthorYear, starts)
}

fn strip_marker(text: &str, strategy: Strategy) -> &str {
    let re = match strategy {
        Strategy::Bracketed => &*BRACKET,
        Strategy::Numbered => &*NUMBERED,
        _ => return text,
    };
    match re.find(text) {
        Some(m) if !text[m.end()..].trim().is_empty() => text[m.end()..].trim_start(),
        _ => text,
    }
}

/// Appends a line to a growing entry, repairing end-of-line hyphenation.
///
/// A trailing hyphen is dropped only when the word before it is plain
/// lowercase letters and the next line starts with a lowercase letter.
/// Any other trailing hyphen or dash is kept and joined without a space.
pub fn join_line(acc: &mut String, next: &str) {
    let next = next.trim();
    if next.is_empty() {
        return;
    }
    if acc.is_empty() {
        acc.push_str(next);
        return;
    }
    if let Some(stem) = acc.strip_suffix('-') {
        let word = stem.rsplit(char::is_whitespace).next().unwrap_or("");
        let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
        let lower_word = !word.is_empty() && word.chars().all(|c| c.is_alphabetic() && c.is_lowercase());
        let lower_next = next.chars().next().is_some_and(|c| c.is_alphabetic() && c.is_lowercase());
        if lower_word && lower_next {
            acc.pop();
        }
        acc.push_str(next);
    } else if acc.ends_with(['–', '—', '/']) {
        acc.push_str(next);
    } else {
        acc.push(' ');
        acc.push_str(next);
    }
}

/// Line indices of each entry, in order; every line belongs to exactly one group.
pub fn segment_lines(lines: &[TextLine]) -> (Strategy, Vec<Vec<usize>>) {
    let (strategy, starts) = entry_starts(lines);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &start) in starts.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if !start => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    (strategy, groups)
}

/// One extracted citation per reference entry.
pub fn segment_entries(region: &ReferenceRegion) -> Vec<Citation> {
    let lines = &region.lines;
    let (strategy, groups) = segment_lines(lines);
    groups
        .into_iter()
        .map(|group| {
            let mut raw = String::new();
            for (k, &i) in group.iter().enumerate() {
                let text = if k == 0 { strip_marker(&lines[i].text, strategy) } else { &lines[i].text };
                join_line(&mut raw, text);
            }
            let raw = raw.split_whitespace().collect::<Vec<_>>().join(" ");
            Citation::new(raw).with_bboxes(group.iter().map(|&i| lines[i].bbox).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundingBox;

    fn at(text: &str, page: usize, x: f64, y: f64) -> TextLine {
        TextLine {
            page_index: page,
            bbox: BoundingBox::new(page, x, y, x + 200.0, y + 9.0),
            text: text.into(),
            column_index: 0,
        }
    }

    fn region(lines: Vec<TextLine>) -> ReferenceRegion {
        ReferenceRegion { heading_line: at("References", 0, 72.0, 760.0), lines }
    }

    #[test]
    fn hyphenation_rules() {
        let cases = [
            ("exam-", "ple", "example"),
            ("halluci-", "nated", "hallucinated"),
            ("a Bi-", "LSTM", "a Bi-LSTM"),
            ("Levenshtein-", "based", "Levenshtein-based"),
            ("state-of-the-", "art", "state-of-the-art"),
            ("pp. 1–", "10", "pp. 1–10"),
            ("two", "words", "two words"),
        ];
        for (a, b, want) in cases {
            let mut acc = a.to_string();
            join_line(&mut acc, b);
            assert_eq!(acc, want);
        }
    }

    #[test]
    fn bracket_markers_stripped() {
        let r = region(vec![
            at("[1] A. Author. First title.", 0, 72.0, 700.0),
            at("[2] B. Author. Second title", 0, 72.0, 690.0),
            at("continues here.", 0, 90.0, 680.0),
            at("[3] C. Author. Third.", 0, 72.0, 670.0),
        ]);
        let cs = segment_entries(&r);
        let raws: Vec<&str> = cs.iter().map(|c| c.raw_text.as_str()).collect();
        assert_eq!(raws, ["A. Author. First title.", "B. Author. Second title continues here.", "C. Author. Third."]);
        assert_eq!(cs[1].bboxes.len(), 2);
    }

    #[test]
    fn numbered_must_be_sequential() {
        let lines = vec![
            at("1. Doe, J.: Title one. In: Proc", 0, 72.0, 700.0),
            at("12. Workshop (2020)", 0, 87.0, 690.0),
            at("2. Roe, K.: Title two (2019)", 0, 72.0, 680.0),
        ];
        let (strategy, groups) = segment_lines(&lines);
        assert_eq!(strategy, Strategy::Numbered);
        assert_eq!(groups, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn hanging_indent_across_pages() {
        let r = region(vec![
            at("Doe, Jane. 2020. A study of", 0, 72.0, 100.0),
            at("things. In Proceedings.", 1, 82.0, 720.0),
            at("Roe, Kim. 2019. Another.", 1, 72.0, 710.0),
        ]);
        let cs = segment_entries(&r);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].raw_text, "Doe, Jane. 2020. A study of things. In Proceedings.");
        assert_eq!(cs[0].bboxes.iter().map(|b| b.page_index).collect::<Vec<_>>(), [0, 1]);
    }

    #[test]
    fn author_year_flush_left() {
        let lines = vec![
            at("Doe, J. 2020. A title that", 0, 72.0, 700.0),
            at("wraps. In Proc.", 0, 72.0, 690.0),
            at("Roe, K. 2019. Another title.", 0, 72.0, 680.0),
        ];
        let (strategy, groups) = segment_lines(&lines);
        assert_eq!(strategy, Strategy::AuthorYear);
        assert_eq!(groups, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn single_line_entries_are_stable() {
        let lines: Vec<TextLine> =
            (0..4).map(|i| at(&format!("[{}] Entry number {i}.", i + 1), 0, 72.0, 700.0 - 10.0 * i as f64)).collect();
        let first = segment_entries(&region(lines.clone()));
        let again: Vec<TextLine> = first
            .iter()
            .enumerate()
            .map(|(i, c)| at(&format!("[{}] {}", i + 1, c.raw_text), 0, 72.0, 700.0 - 10.0 * i as f64))
            .collect();
        let second = segment_entries(&region(again));
        assert_eq!(first, second);
    }
}
