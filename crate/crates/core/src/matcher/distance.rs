use std::cmp::Ordering;
use std::collections::HashMap;

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// `1 - distance / max_len`, with two empty strings defined as identical.
pub fn similarity_from(distance: usize, max_len: usize) -> f64 {
    if max_len == 0 {
        1.0
    } else {
        1.0 - distance as f64 / max_len as f64
    }
}

/// Normalized Levenshtein similarity in `[0, 1]`.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    similarity_from(levenshtein(a, b), max_len)
}

/// An exact similarity value kept as a fraction so that comparisons never
/// depend on floating-point rounding.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Score {
    pub distance: usize,
    pub max_len: usize,
}

impl Score {
    pub fn new(distance: usize, max_len: usize) -> Self {
        Self { distance, max_len }
    }

    pub fn value(self) -> f64 {
        similarity_from(self.distance, self.max_len)
    }

    // 1 - d1/m1 vs 1 - d2/m2  <=>  d2*m1 vs d1*m2
    fn cmp_value(&self, other: &Self) -> Ordering {
        let lhs = if self.max_len == 0 { (0u128, 1u128) } else { (self.distance as u128, self.max_len as u128) };
        let rhs = if other.max_len == 0 { (0u128, 1u128) } else { (other.distance as u128, other.max_len as u128) };
        (rhs.0 * lhs.1).cmp(&(lhs.0 * rhs.1))
    }
}

impl PartialEq for Score {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

/// Bit-parallel edit distance (Myers 1999, blocked form) against a fixed
/// pattern. Equivalent to [`levenshtein`] with the pattern as one argument.
pub(crate) struct Pattern {
    len: usize,
    blocks: usize,
    ascii: Vec<u64>,
    other: HashMap<char, Vec<u64>>,
    zeros: Vec<u64>,
}

impl Pattern {
    pub fn new(pattern: &str) -> Self {
        let chars: Vec<char> = pattern.chars().collect();
        let len = chars.len();
        let blocks = len.div_ceil(64).max(1);
        let mut ascii = vec![0u64; 128 * blocks];
        let mut other: HashMap<char, Vec<u64>> = HashMap::new();
        for (i, &c) in chars.iter().enumerate() {
            let (block, bit) = (i / 64, i % 64);
            if c.is_ascii() {
                ascii[c as usize * blocks + block] |= 1 << bit;
            } else {
                other.entry(c).or_insert_with(|| vec![0; blocks])[block] |= 1 << bit;
            }
        }
        Self { len, blocks, ascii, other, zeros: vec![0; blocks] }
    }

    #[inline]
    fn peq(&self, c: char) -> &[u64] {
        if c.is_ascii() {
            let at = c as usize * self.blocks;
            &self.ascii[at..at + self.blocks]
        } else {
            self.other.get(&c).map_or(&self.zeros, Vec::as_slice)
        }
    }

    pub fn distance(&self, text: &str) -> usize {
        if self.len == 0 {
            return text.chars().count();
        }
        if self.blocks == 1 {
            return self.distance_single(text);
        }
        self.distance_blocked(text)
    }

    fn distance_single(&self, text: &str) -> usize {
        let high = 1u64 << ((self.len - 1) % 64);
        let mut pv = !0u64;
        let mut mv = 0u64;
        let mut score = self.len;
        for c in text.chars() {
            let eq = self.peq(c)[0];
            let xv = eq | mv;
            let xh = ((eq & pv).wrapping_add(pv) ^ pv) | eq;
            let mut ph = mv | !(xh | pv);
            let mut mh = pv & xh;
            if ph & high != 0 {
                score += 1;
            } else if mh & high != 0 {
                score -= 1;
            }
            ph = (ph << 1) | 1;
            mh <<= 1;
            pv = mh | !(xv | ph);
            mv = ph & xv;
        }
        score
    }

    fn distance_blocked(&self, text: &str) -> usize {
        let last_high = 1u64 << ((self.len - 1) % 64);
        let mut pv = vec![!0u64; self.blocks];
        let mut mv = vec![0u64; self.blocks];
        let mut score = self.len as isize;
        for c in text.chars() {
            let peq = self.peq(c);
            // The top boundary row D[0][j] = j always grows by one.
            let mut hin: i32 = 1;
            for b in 0..self.blocks {
                let high = if b + 1 == self.blocks { last_high } else { 1 << 63 };
                let mut eq = peq[b];
                let xv = eq | mv[b];
                if hin < 0 {
                    eq |= 1;
                }
                let xh = ((eq & pv[b]).wrapping_add(pv[b]) ^ pv[b]) | eq;
                let mut ph = mv[b] | !(xh | pv[b]);
                let mut mh = pv[b] & xh;
                let hout = if ph & high != 0 {
                    1
                } else if mh & high != 0 {
                    -1
                } else {
                    0
                };
                ph <<= 1;
                mh <<= 1;
                if hin < 0 {
                    mh |= 1;
                } else if hin > 0 {
                    ph |= 1;
                }
                pv[b] = mh | !(xv | ph);
                mv[b] = ph & xv;
                hin = hout;
            }
            score += hin as isize;
        }
        score as usize
    }
}
