//! Deterministic cue-word and punctuation labeler.
//!
//! Works left to right through the usual order of a reference: an author
//! list, an optional year, the title, then venue material. A title enclosed
//! in double quotes overrides the positional reading.

use super::token::{is_year, DigitShape, Token};
use super::{Labeler, RecognizeError};
use crate::model::FieldTag;

use FieldTag::*;

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleLabeler;

impl Labeler for RuleLabeler {
    fn name(&self) -> &str {
        "rules"
    }

    fn version(&self) -> &str {
        "1"
    }

    fn label(&self, tokens: &[Token]) -> Result<Vec<FieldTag>, RecognizeError> {
        Ok(label_rules(tokens))
    }
}

/// Abbreviations whose trailing period never ends a segment.
const ABBREV: &[&str] = &[
    "al", "pp", "vol", "vols", "no", "nos", "eds", "ed", "vs", "etc", "cf", "e", "g", "i", "approx", "proc", "conf",
    "trans", "symp", "jr", "dept", "univ", "tech", "rep", "fig", "suppl", "ser",
];

/// Capitalized journal and venue abbreviations, only honoured after the title.
const VENUE_ABBREV: &[&str] = &[
    "J", "Mach", "Learn", "Res", "Comput", "Ling", "Linguist", "Intell", "Artif", "Assoc", "Natl", "Acad", "Sci",
    "Rev", "Lett", "Phys", "Stat", "Math", "Syst", "Inf", "Process", "Soc", "Am", "Eng", "Med", "Biol", "Chem", "Netw",
    "Appl", "Int", "Intl", "Annu", "Meet", "Vis", "Anal", "Recognit", "Comp", "Commun", "Lang", "Neural", "Inc",
    "Corp", "Ltd", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov", "Dec",
];

const PARTICLES: &[&str] = &[
    "van", "von", "de", "der", "den", "da", "di", "del", "della", "la", "le", "du", "dos", "das", "y", "bin", "ibn",
    "al-",
];
const CONNECTORS: &[&str] = &["and", "&", "et", "al", "others"];

const MONTHS: &[&str] = &[
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
    "jan",
    "feb",
    "mar",
    "apr",
    "jun",
    "jul",
    "aug",
    "sep",
    "sept",
    "oct",
    "nov",
    "dec",
];

const BOOKTITLE_CUES: &[&str] =
    &["proceedings", "proc", "conference", "workshop", "symposium", "meeting", "advances", "findings"];
const JOURNAL_CUES: &[&str] = &["journal", "transactions", "trans", "letters", "magazine", "review", "arxiv", "corr"];
const PUBLISHER_CUES: &[&str] = &[
    "press",
    "springer",
    "elsevier",
    "wiley",
    "publishers",
    "publishing",
    "curran",
    "association",
    "o'reilly",
    "pearson",
];
const INSTITUTION_CUES: &[&str] =
    &["university", "institute", "laboratory", "laboratories", "lab", "department", "school"];
const SERIES_CUES: &[&str] = &["lecture", "lncs", "series"];
const NOTE_CUES: &[&str] = &["accessed", "note", "available", "online", "retrieved"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Title,
    Venue,
}

fn lower(t: &Token) -> String {
    t.text.to_lowercase()
}

fn glued(tokens: &[Token], i: usize) -> bool {
    i > 0 && i < tokens.len() && tokens[i].start_char == tokens[i - 1].end_char
}

fn is_alpha_word(t: &Token) -> bool {
    t.text.chars().any(char::is_alphabetic)
}

fn is_year_tok(t: &Token) -> bool {
    t.shape.digits == DigitShape::Year && is_year(&t.text)
}

fn is_quote_tok(tokens: &[Token], i: usize) -> bool {
    let t = &tokens[i].text;
    match t.as_str() {
        "\"" | "“" | "”" => true,
        // An apostrophe inside a word ("O’Brien") is not a quote.
        "’" | "‘" => !(glued(tokens, i) && glued(tokens, i + 1)),
        _ => false,
    }
}

fn is_initial(t: &Token) -> bool {
    let s = t.text.trim_start_matches('-');
    let mut c = s.chars();
    matches!((c.next(), c.next()), (Some(a), None) if a.is_uppercase())
}

fn is_name_word(t: &Token) -> bool {
    let s = t.text.trim_start_matches('-');
    let mut chars = s.chars();
    let Some(first) = chars.next() else { return false };
    (first.is_uppercase() && chars.all(|c| c.is_alphabetic() || matches!(c, '-' | '\'' | '’')))
        || PARTICLES.contains(&t.text.as_str())
}

fn is_abbrev(t: &Token, phase: Phase) -> bool {
    ABBREV.contains(&lower(t).as_str()) || (phase == Phase::Venue && VENUE_ABBREV.contains(&t.text.as_str()))
}

/// A period that ends a segment: followed by whitespace or the end, and not
/// closing a known abbreviation.
fn is_terminator(tokens: &[Token], i: usize, phase: Phase) -> bool {
    tokens[i].text == "."
        && (i + 1 == tokens.len() || !glued(tokens, i + 1))
        && !(i > 0 && glued(tokens, i) && is_abbrev(&tokens[i - 1], phase))
}

fn is_venue_cue(t: &Token) -> bool {
    let l = lower(t);
    l == "in" || BOOKTITLE_CUES.contains(&l.as_str()) || JOURNAL_CUES.contains(&l.as_str())
}

fn skip_marker(tokens: &[Token]) -> usize {
    let first = &tokens[0].text;
    if first.starts_with('[') && first.ends_with(']') && first.len() > 2 {
        return 1;
    }
    if tokens.len() > 2
        && tokens[0].shape.digits == DigitShape::All
        && tokens[0].text.len() <= 3
        && tokens[1].text == "."
    {
        return 2;
    }
    0
}

/// After an initial's period, does the author list go on?
fn initial_continues(tokens: &[Token], j: usize, limit: usize) -> bool {
    if j >= limit {
        return false;
    }
    let t = &tokens[j];
    match t.text.as_str() {
        "," | ";" | ":" | "and" | "&" | "(" => return true,
        _ => {}
    }
    if is_year_tok(t) || (is_initial(t) && tokens.get(j + 1).is_some_and(|n| n.text == ".")) {
        return true;
    }
    if !is_name_word(t) {
        return false;
    }
    let mut k = j + 1;
    while k < limit && k <= j + 2 && is_name_word(&tokens[k]) && !is_initial(&tokens[k]) {
        k += 1;
    }
    k < limit && (matches!(tokens[k].text.as_str(), "," | "." | ":" | "and" | "&" | "(") || is_year_tok(&tokens[k]))
}

/// Tags the leading author list; returns the index after it.
fn label_authors(tokens: &[Token], start: usize, limit: usize, bounded: bool, tags: &mut [FieldTag]) -> usize {
    let mut i = start;
    let mut last_good: Option<usize> = None;
    let mut saw_name = false;
    let mut end = None;
    while i < limit {
        let t = &tokens[i];
        let stop = is_year_tok(t)
            || t.text == ":"
            || is_quote_tok(tokens, i)
            || (t.text == "(" && tokens.get(i + 1).is_some_and(is_year_tok));
        if stop {
            end = Some(i);
            break;
        }
        if t.text == "." {
            let prev = i.checked_sub(1).map(|p| &tokens[p]);
            let continues = if prev.is_some_and(|p| is_initial(p) || p.text == "al") {
                initial_continues(tokens, i + 1, limit)
            } else {
                false
            };
            if continues {
                i += 1;
                last_good = Some(i);
                continue;
            }
            end = Some(i + 1);
            break;
        }
        if t.text == "," || t.text == ";" {
            last_good = Some(i + 1);
            i += 1;
            continue;
        }
        if is_name_word(t) || (saw_name && CONNECTORS.contains(&t.text.as_str())) {
            saw_name |= is_name_word(t);
            i += 1;
            continue;
        }
        end = if saw_name { last_good } else { None };
        if end.is_none() {
            return start;
        }
        break;
    }
    let end = match end {
        Some(e) => e,
        None if bounded && saw_name => limit,
        None => return start,
    };
    if !saw_name || end <= start {
        return start;
    }
    for tag in &mut tags[start..end] {
        *tag = Author;
    }
    // Trailing separators belong to no field; a period after an initial stays.
    let mut k = end;
    while k > start {
        let t = &tokens[k - 1].text;
        let keep = t == "." && k >= 2 && (is_initial(&tokens[k - 2]) || tokens[k - 2].text == "al");
        if matches!(t.as_str(), "," | ";" | "." | "and" | "&") && !keep {
            tags[k - 1] = Other;
            k -= 1;
        } else {
            break;
        }
    }
    end
}

fn label_leading_date(tokens: &[Token], mut i: usize, tags: &mut [FieldTag]) -> usize {
    let n = tokens.len();
    let open = i < n && tokens[i].text == "(";
    let j = if open { i + 1 } else { i };
    if j < n && is_year_tok(&tokens[j]) {
        tags[j] = Date;
        i = j + 1;
        while i < n && matches!(tokens[i].text.as_str(), ")" | "." | "," | ":") {
            i += 1;
        }
    }
    i
}

fn ends_question(t: &Token) -> bool {
    t.text.len() > 1 && (t.text.ends_with('?') || t.text.ends_with('!'))
}

/// Whether the sentence starting at `from` reads as venue material: a venue
/// cue, a year, or page and volume numbers before the next terminator.
fn venue_ahead(tokens: &[Token], from: usize) -> bool {
    let mut k = from;
    while k < tokens.len() && !is_terminator(tokens, k, Phase::Venue) {
        let t = &tokens[k];
        if is_venue_cue(t) || is_year_tok(t) || t.shape.digits != DigitShape::None {
            return true;
        }
        k += 1;
    }
    false
}

fn label_title(tokens: &[Token], mut i: usize, tags: &mut [FieldTag]) -> usize {
    let n = tokens.len();
    while i < n && !is_alpha_word(&tokens[i]) && !tokens[i].text.chars().any(|c| c.is_ascii_digit()) {
        i += 1;
    }
    let start = i;
    let mut end = n;
    let mut next = n;
    let mut j = start;
    while j < n {
        let t = &tokens[j];
        if is_terminator(tokens, j, Phase::Title) {
            end = j;
            next = j + 1;
            break;
        }
        if ends_question(t) {
            let follow = tokens.get(j + 1);
            if follow.is_none_or(|f| matches!(f.text.as_str(), "(" | "," | ".")) || venue_ahead(tokens, j + 1) {
                end = j + 1;
                next = j + 1;
                break;
            }
        }
        if t.text == "," && tokens.get(j + 1).is_some_and(|f| is_venue_cue(f) || is_year_tok(f)) && j > start {
            end = j;
            next = j + 1;
            break;
        }
        j += 1;
    }
    let mut e = end;
    while e > start && matches!(tokens[e - 1].text.as_str(), "," | ":" | ";" | "(") {
        e -= 1;
    }
    if tokens[start..e].iter().any(is_alpha_word) {
        for tag in &mut tags[start..e] {
            *tag = Title;
        }
    }
    next
}

fn glued_run_end(tokens: &[Token], i: usize) -> usize {
    let mut j = i + 1;
    while j < tokens.len()
        && glued(tokens, j)
        && !(tokens[j].text == "." && !glued(tokens, j + 1))
        && tokens[j].text != ","
    {
        j += 1;
    }
    j
}

fn is_number_like(t: &Token) -> bool {
    t.text.chars().next().is_some_and(|c| c.is_ascii_digit())
        || (t.text.len() <= 6 && t.text.chars().all(|c| matches!(c, 'i' | 'v' | 'x' | 'l' | 'c')))
}

fn location_like(tokens: &[Token], i: usize) -> bool {
    let mut j = i;
    while j < tokens.len() && j < i + 4 && is_name_word(&tokens[j]) && !PARTICLES.contains(&tokens[j].text.as_str()) {
        let l = lower(&tokens[j]);
        if BOOKTITLE_CUES.contains(&l.as_str())
            || JOURNAL_CUES.contains(&l.as_str())
            || PUBLISHER_CUES.contains(&l.as_str())
        {
            return false;
        }
        j += 1;
    }
    j > i && j < i + 4 && tokens.get(j).is_none_or(|t| matches!(t.text.as_str(), "," | "." | ":") || is_year_tok(t))
}

fn label_venue(tokens: &[Token], start: usize, tags: &mut [FieldTag]) {
    let n = tokens.len();
    let mut state: Option<FieldTag> = None;
    let mut resume: Option<FieldTag> = None;
    let mut seg_start = true;
    let mut venue_seen = false;
    let mut i = start;
    while i < n {
        let t = &tokens[i];
        let l = lower(t);
        let text = t.text.as_str();

        if text == "," || text == ";" || is_terminator(tokens, i, Phase::Venue) {
            resume = if text == "." { None } else { state.filter(|s| matches!(s, Booktitle | Journal | Publisher)) };
            state = None;
            seg_start = true;
            i += 1;
            continue;
        }
        if text == "." {
            // Abbreviation period inside a segment.
            if matches!(state, Some(Booktitle | Journal | Series | Publisher | Institution | Tech)) {
                tags[i] = state.unwrap();
            }
            i += 1;
            continue;
        }
        if text == ":" {
            if state == Some(Volume) {
                state = Some(Pages);
            }
            i += 1;
            continue;
        }
        if matches!(text, "(" | ")" | "\"" | "“" | "”") {
            i += 1;
            continue;
        }
        if l.starts_with("http") || l.starts_with("www") || l == "doi" {
            let end = glued_run_end(tokens, i);
            let tag = if l == "doi" { Pubnum } else { Web };
            for tag_slot in &mut tags[i..end] {
                *tag_slot = tag;
            }
            i = end;
            seg_start = false;
            continue;
        }
        if l == "arxiv" || l == "corr" {
            tags[i] = Journal;
            venue_seen = true;
            let mut j = i + 1;
            if j < n && tokens[j].text == ":" && glued(tokens, j) {
                j += 1;
            }
            if j < n && (glued(tokens, j) || tokens[j].text.starts_with("abs")) && tokens[j].text != "." {
                let end = glued_run_end(tokens, j);
                for tag_slot in &mut tags[j..end] {
                    *tag_slot = Pubnum;
                }
                i = end;
            } else {
                i += 1;
            }
            state = Some(Journal);
            seg_start = false;
            continue;
        }
        if is_year_tok(t) {
            let inside_title = matches!(state, Some(Booktitle | Journal))
                && tokens.get(i + 1).is_some_and(|f| is_alpha_word(f) && f.text != "." && f.text != ",");
            tags[i] = if inside_title { state.unwrap() } else { Date };
            if !inside_title {
                state = None;
            }
            i += 1;
            seg_start = false;
            continue;
        }
        if MONTHS.contains(&l.trim_end_matches('.'))
            && tokens
                .get(i + 1)
                .is_some_and(|f| is_year_tok(f) || f.text == "." && tokens.get(i + 2).is_some_and(is_year_tok))
        {
            tags[i] = Date;
            i += 1;
            continue;
        }
        match l.as_str() {
            "in" if seg_start => {
                state = Some(Booktitle);
                venue_seen = true;
                i += 1;
                continue;
            }
            "pp" | "pages" | "page" | "p" => {
                state = Some(Pages);
                i += 1;
                seg_start = false;
                continue;
            }
            "vol" | "volume" => {
                state = Some(Volume);
                i += 1;
                seg_start = false;
                continue;
            }
            "no" | "number" | "issue" if tokens.get(i + 1).is_some_and(|f| f.text == "." || is_number_like(f)) => {
                state = Some(Issue);
                i += 1;
                seg_start = false;
                continue;
            }
            _ => {}
        }
        if is_number_like(t) && t.text.chars().any(|c| c.is_ascii_digit()) {
            let tag = match state {
                Some(s @ (Pages | Volume | Issue)) => s,
                Some(s @ (Booktitle | Journal | Series | Tech | Pubnum)) if t.shape.digits != DigitShape::Range => s,
                _ if t.shape.digits == DigitShape::Range => Pages,
                _ if tokens.get(i + 1).is_some_and(|f| f.text == "(")
                    && tokens.get(i + 2).is_some_and(is_number_like) =>
                {
                    state = Some(Volume);
                    Volume
                }
                _ => Other,
            };
            tags[i] = tag;
            if state == Some(Volume) && tokens.get(i + 1).is_some_and(|f| f.text == "(") {
                state = Some(Issue);
            } else if state == Some(Issue) && tokens.get(i + 1).is_some_and(|f| f.text == ")") {
                state = Some(Volume);
            }
            i += 1;
            seg_start = false;
            continue;
        }

        if seg_start || state.is_none() {
            let cue = if BOOKTITLE_CUES.contains(&l.as_str()) {
                Some(Booktitle)
            } else if JOURNAL_CUES.contains(&l.as_str()) {
                Some(Journal)
            } else if PUBLISHER_CUES.contains(&l.as_str()) && !matches!(state, Some(Booktitle | Journal)) {
                Some(Publisher)
            } else if INSTITUTION_CUES.contains(&l.as_str()) {
                Some(Institution)
            } else if SERIES_CUES.contains(&l.as_str()) {
                Some(Series)
            } else if NOTE_CUES.contains(&l.as_str()) {
                Some(Note)
            } else if l == "collaboration" {
                Some(Collaboration)
            } else if l == "technical" || l == "tech" || l == "report" {
                Some(Tech)
            } else if matches!(l.as_str(), "eds" | "editors" | "ed" | "editor") {
                Some(Editor)
            } else {
                None
            };
            let next = match cue {
                Some(c) => Some(c),
                None if !is_alpha_word(t) => None,
                None if seg_start && resume.is_some() && location_like(tokens, i) => Some(Location),
                None if seg_start && resume.is_some() => resume,
                None if !venue_seen => Some(Journal),
                None => None,
            };
            if matches!(next, Some(Booktitle | Journal)) {
                venue_seen = true;
            }
            if next.is_some() {
                state = next;
            }
        }
        seg_start = false;
        if let Some(s) = state {
            tags[i] = s;
        }
        i += 1;
    }
}

pub(crate) fn label_rules(tokens: &[Token]) -> Vec<FieldTag> {
    let n = tokens.len();
    let mut tags = vec![Other; n];
    if n == 0 {
        return tags;
    }
    let pos = skip_marker(tokens);

    if let Some((open, close)) = find_quoted(tokens, pos) {
        let after = label_authors(tokens, pos, open, true, &mut tags);
        for i in after..open {
            if is_year_tok(&tokens[i]) {
                tags[i] = Date;
            }
        }
        let mut end = close;
        while end > open + 1 && matches!(tokens[end - 1].text.as_str(), "," | "." | ";" | ":") {
            end -= 1;
        }
        for tag in &mut tags[open + 1..end] {
            *tag = Title;
        }
        label_venue(tokens, close + 1, &mut tags);
        return tags;
    }

    let after_authors = label_authors(tokens, pos, n, false, &mut tags);
    let after_date = label_leading_date(tokens, after_authors, &mut tags);
    let after_title = label_title(tokens, after_date, &mut tags);
    label_venue(tokens, after_title, &mut tags);
    tags
}

/// First double-quoted segment with some alphabetic content.
fn find_quoted(tokens: &[Token], from: usize) -> Option<(usize, usize)> {
    let mut i = from;
    while i < tokens.len() {
        let open = match tokens[i].text.as_str() {
            "“" => Some("”"),
            "\"" => Some("\""),
            _ => None,
        };
        if let Some(close_text) = open {
            if let Some(k) = (i + 1..tokens.len()).find(|&k| tokens[k].text == close_text) {
                if tokens[i + 1..k].iter().any(is_alpha_word) {
                    return Some((i, k));
                }
                i = k;
            }
        }
        i += 1;
    }
    None
}
