//! Helvetica advance widths (1/1000 em) and the WinAnsi code page.

/// Widths for codes 32..=126.
const ASCII_WIDTHS: [u16; 95] = [
    278, 278, 355, 556, 556, 889, 667, 191, 333, 333, 389, 584, 278, 333, 278, 278, // ' '..'/'
    556, 556, 556, 556, 556, 556, 556, 556, 556, 556, 278, 278, 584, 584, 584, 556, // '0'..'?'
    1015, 667, 667, 722, 722, 667, 611, 778, 722, 278, 500, 667, 556, 833, 722, 778, // '@'..'O'
    667, 778, 722, 667, 611, 722, 667, 944, 667, 667, 611, 278, 278, 278, 469, 556, // 'P'..'_'
    333, 556, 556, 500, 556, 556, 278, 556, 556, 222, 222, 500, 222, 833, 556, 556, // '`'..'o'
    556, 556, 333, 500, 278, 556, 500, 722, 500, 500, 500, 334, 260, 334, 584, // 'p'..'~'
];

const DEFAULT_WIDTH: u16 = 556;

/// WinAnsi codes 0x80..=0x9F. Unassigned slots are `None`.
const WIN_ANSI_HIGH: [Option<char>; 32] = [
    Some('€'),
    None,
    Some('‚'),
    Some('ƒ'),
    Some('„'),
    Some('…'),
    Some('†'),
    Some('‡'),
    Some('ˆ'),
    Some('‰'),
    Some('Š'),
    Some('‹'),
    Some('Œ'),
    None,
    Some('Ž'),
    None,
    None,
    Some('‘'),
    Some('’'),
    Some('“'),
    Some('”'),
    Some('•'),
    Some('–'),
    Some('—'),
    Some('˜'),
    Some('™'),
    Some('š'),
    Some('›'),
    Some('œ'),
    None,
    Some('ž'),
    Some('Ÿ'),
];

/// Helvetica advance width of `c` in 1/1000 em.
pub fn helvetica_width(c: char) -> u16 {
    match c {
        ' '..='~' => ASCII_WIDTHS[c as usize - 32],
        '‘' | '’' | '‚' => 222,
        '“' | '”' | '„' => 333,
        '–' => 556,
        '—' | '…' | '‰' | '™' => 1000,
        '•' => 350,
        '\u{a0}' => 278,
        c if c.is_alphabetic() => {
            let base = unicode_base(c);
            if base.is_ascii_alphabetic() {
                ASCII_WIDTHS[base as usize - 32]
            } else {
                DEFAULT_WIDTH
            }
        }
        _ => DEFAULT_WIDTH,
    }
}

fn unicode_base(c: char) -> char {
    use unicode_normalization::UnicodeNormalization;
    std::iter::once(c).nfd().next().unwrap_or(c)
}

pub fn win_ansi_byte(c: char) -> Option<u8> {
    match c as u32 {
        0x20..=0x7e | 0xa0..=0xff => Some(c as u8),
        _ => WIN_ANSI_HIGH.iter().position(|&h| h == Some(c)).map(|i| 0x80 + i as u8),
    }
}

pub fn win_ansi_char(b: u8) -> Option<char> {
    match b {
        0x20..=0x7e | 0xa0..=0xff => Some(b as char),
        0x80..=0x9f => WIN_ANSI_HIGH[(b - 0x80) as usize],
        _ => None,
    }
}

/// Width of each WinAnsi code from `first..=last`, for a font's /Widths array.
pub fn win_ansi_widths(first: u8, last: u8) -> Vec<u16> {
    (first..=last).map(|b| win_ansi_char(b).map_or(0, helvetica_width)).collect()
}

/// Width of `s` in points at `size`.
pub fn text_width(s: &str, size: f64) -> f64 {
    s.chars().map(|c| helvetica_width(c) as f64).sum::<f64>() * size / 1000.0
}
