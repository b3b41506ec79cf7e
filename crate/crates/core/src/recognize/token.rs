use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseShape {
    Upper,
    Lower,
    Capitalized,
    Mixed,
    Caseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigitShape {
    None,
    /// Four digits in 1900..=2099, optionally with one letter suffix ("2020a").
    Year,
    All,
    /// Digits joined by a dash ("1–10").
    Range,
    Some,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PunctShape {
    None,
    Open,
    Close,
    Terminator,
    Separator,
    Quote,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub case: CaseShape,
    pub digits: DigitShape,
    pub punct: PunctShape,
}

impl Shape {
    pub fn of(text: &str) -> Shape {
        let letters: Vec<char> = text.chars().filter(|c| c.is_alphabetic()).collect();
        let case = if letters.is_empty() {
            CaseShape::Caseless
        } else if letters.iter().all(|c| c.is_uppercase()) {
            CaseShape::Upper
        } else if letters.iter().all(|c| c.is_lowercase()) {
            CaseShape::Lower
        } else if letters[0].is_uppercase() && letters[1..].iter().all(|c| !c.is_uppercase()) {
            CaseShape::Capitalized
        } else {
            CaseShape::Mixed
        };
        let n_digits = text.chars().filter(char::is_ascii_digit).count();
        let digits = if n_digits == 0 {
            DigitShape::None
        } else if is_year(text) {
            DigitShape::Year
        } else if n_digits == text.chars().count() {
            DigitShape::All
        } else if is_range(text) {
            DigitShape::Range
        } else {
            DigitShape::Some
        };
        let mut chars = text.chars();
        let punct = match (chars.next(), chars.next()) {
            (Some(c), None) => match c {
                '(' | '[' => PunctShape::Open,
                ')' | ']' => PunctShape::Close,
                '.' | '?' | '!' => PunctShape::Terminator,
                ',' | ':' | ';' => PunctShape::Separator,
                '"' | '“' | '”' | '‘' | '’' => PunctShape::Quote,
                c if c.is_alphanumeric() => PunctShape::None,
                _ => PunctShape::Other,
            },
            _ if text.chars().all(|c| !c.is_alphanumeric()) => PunctShape::Other,
            _ => PunctShape::None,
        };
        Shape { case, digits, punct }
    }

    /// Compact feature string such as `C-n-none`.
    pub fn code(&self) -> String {
        let c = match self.case {
            CaseShape::Upper => "U",
            CaseShape::Lower => "l",
            CaseShape::Capitalized => "C",
            CaseShape::Mixed => "M",
            CaseShape::Caseless => "_",
        };
        let d = match self.digits {
            DigitShape::None => "n",
            DigitShape::Year => "y",
            DigitShape::All => "d",
            DigitShape::Range => "r",
            DigitShape::Some => "s",
        };
        let p = match self.punct {
            PunctShape::None => "none",
            PunctShape::Open => "open",
            PunctShape::Close => "close",
            PunctShape::Terminator => "term",
            PunctShape::Separator => "sep",
            PunctShape::Quote => "quote",
            PunctShape::Other => "other",
        };
        format!("{c}-{d}-{p}")
    }
}

pub fn is_year(text: &str) -> bool {
    let digits: String = text.chars().take_while(char::is_ascii_digit).collect();
    let rest = &text[digits.len()..];
    digits.len() == 4
        && rest.chars().count() <= 1
        && rest.chars().all(|c| c.is_ascii_lowercase())
        && digits.parse::<u32>().is_ok_and(|y| (1900..=2099).contains(&y))
}

fn is_range(text: &str) -> bool {
    let mut parts = text.split(['-', '–', '—']);
    let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    let numeric = |s: &str| {
        !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric()) && s.chars().any(|c| c.is_ascii_digit())
    };
    numeric(a) && numeric(b)
}

/// A token with char offsets into the citation's raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start_char: usize,
    pub end_char: usize,
    pub shape: Shape,
}

fn is_split_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ':' | ';' | '"' | '(' | ')' | '“' | '”' | '‘' | '’')
}

/// Splits on whitespace; field punctuation becomes single-character tokens.
pub fn tokenize(raw_text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let flush = |current: &mut String, start: usize, end: usize, tokens: &mut Vec<Token>| {
        if !current.is_empty() {
            let text = std::mem::take(current);
            let shape = Shape::of(&text);
            tokens.push(Token { text, start_char: start, end_char: end, shape });
        }
    };
    for (i, c) in raw_text.chars().enumerate() {
        if c.is_whitespace() {
            flush(&mut current, start, i, &mut tokens);
        } else if is_split_punct(c) {
            flush(&mut current, start, i, &mut tokens);
            current.push(c);
            flush(&mut current, i, i + 1, &mut tokens);
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(c);
        }
    }
    let n = raw_text.chars().count();
    flush(&mut current, start, n, &mut tokens);
    tokens
}
