//! Exact best-match search over normalized titles.
//!
//! Every entry that could beat or tie the current best gets an exact
//! distance; the rest are skipped using lower bounds on edit distance:
//! the length difference, the bag (character-count) distance and the
//! q-gram count bound. Exact duplicates of the query are found by hash.

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use super::distance::{Pattern, Score};

const Q: usize = 3;
const BUCKETS: usize = 32;
const SEEDS: usize = 16;

fn pack(a: char, b: char, c: char) -> u64 {
    ((a as u64) << 42) | ((b as u64) << 21) | c as u64
}

fn grams_of(chars: &[char]) -> impl Iterator<Item = u64> + '_ {
    chars.windows(Q).map(|w| pack(w[0], w[1], w[2]))
}

fn gram_total(len: usize) -> usize {
    len.saturating_sub(Q - 1)
}

fn title_hash(s: &str) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

/// Saturating per-bucket character counts. Letters and digits get their own
/// buckets; everything else shares a few.
type Histogram = [u8; BUCKETS];

fn bucket(c: char) -> usize {
    match c {
        'a'..='z' => c as usize - 'a' as usize,
        '0'..='9' => 26 + (c as usize - '0' as usize) % 3,
        ' ' => 29,
        _ => 30 + c as usize % 2,
    }
}

fn histogram(chars: &[char]) -> Histogram {
    let mut h = [0u8; BUCKETS];
    for &c in chars {
        let b = &mut h[bucket(c)];
        *b = b.saturating_add(1);
    }
    h
}

/// Bag distance, a lower bound on edit distance: each edit fixes at most one
/// surplus character on either side. Merged buckets and saturation only
/// shrink it.
fn bag_bound(a: &Histogram, b: &Histogram) -> usize {
    let surplus: u32 = a.iter().zip(b).map(|(x, y)| x.saturating_sub(*y) as u32).sum();
    let deficit: u32 = a.iter().zip(b).map(|(x, y)| y.saturating_sub(*x) as u32).sum();
    surplus.max(deficit) as usize
}

/// Delta-varint posting list of ascending entry positions.
#[derive(Debug, Default)]
struct Postings {
    count: u32,
    last: u32,
    bytes: Vec<u8>,
}

impl Postings {
    fn push(&mut self, id: u32) {
        let mut delta = if self.count == 0 { id } else { id - self.last };
        loop {
            let byte = (delta & 0x7f) as u8;
            delta >>= 7;
            if delta == 0 {
                self.bytes.push(byte);
                break;
            }
            self.bytes.push(byte | 0x80);
        }
        self.last = id;
        self.count += 1;
    }

    fn for_each(&self, mut f: impl FnMut(u32)) {
        let mut current = 0u32;
        let mut value = 0u32;
        let mut shift = 0;
        let mut first = true;
        for &b in &self.bytes {
            value |= ((b & 0x7f) as u32) << shift;
            if b & 0x80 != 0 {
                shift += 7;
                continue;
            }
            current = if first { value } else { current + value };
            first = false;
            f(current);
            value = 0;
            shift = 0;
        }
    }
}

#[derive(Debug, Default)]
pub(crate) struct TitleIndex {
    lengths: Vec<u32>,
    histograms: Vec<Histogram>,
    by_length: Vec<Vec<u32>>,
    /// Histograms laid out like `by_length`, for sequential scans.
    length_histograms: Vec<Vec<Histogram>>,
    grams: HashMap<u64, Postings>,
    /// Title hash to the first position holding that hash.
    exact: HashMap<u64, u32>,
}

impl TitleIndex {
    /// Builds the index; positions follow iteration order, which must be
    /// ascending entry id for ties to resolve to the smallest id.
    pub fn build<'a>(titles: impl IntoIterator<Item = &'a str>) -> Self {
        let mut index = TitleIndex::default();
        let mut chars = Vec::new();
        let mut distinct = Vec::new();
        for (id, title) in titles.into_iter().enumerate() {
            let id = id as u32;
            chars.clear();
            chars.extend(title.chars());
            let len = chars.len();
            let hist = histogram(&chars);
            index.lengths.push(len as u32);
            index.histograms.push(hist);
            if index.by_length.len() <= len {
                index.by_length.resize_with(len + 1, Vec::new);
                index.length_histograms.resize_with(len + 1, Vec::new);
            }
            index.by_length[len].push(id);
            index.length_histograms[len].push(hist);
            index.exact.entry(title_hash(title)).or_insert(id);

            distinct.clear();
            distinct.extend(grams_of(&chars));
            distinct.sort_unstable();
            distinct.dedup();
            for &g in &distinct {
                index.grams.entry(g).or_default().push(id);
            }
        }
        for p in index.grams.values_mut() {
            p.bytes.shrink_to_fit();
        }
        index
    }

    pub fn length_of(&self, id: u32) -> usize {
        self.lengths[id as usize] as usize
    }

    /// Per entry, the summed query multiplicity of the query grams it
    /// contains, an upper bound on the shared q-gram count. `None` when the
    /// postings to decode exceed `max_volume`.
    fn gram_weights(&self, query: &[char], max_volume: usize) -> Option<Vec<u16>> {
        let mut mult: HashMap<u64, u16> = HashMap::new();
        for g in grams_of(query) {
            *mult.entry(g).or_default() += 1;
        }
        let lists: Vec<(&Postings, u16)> =
            mult.iter().filter_map(|(g, &m)| self.grams.get(g).map(|p| (p, m))).collect();
        let volume: usize = lists.iter().map(|(p, _)| p.count as usize).sum();
        if volume > max_volume {
            return None;
        }
        let mut weights = vec![0u16; self.lengths.len()];
        for (p, m) in lists {
            p.for_each(|id| weights[id as usize] = weights[id as usize].saturating_add(m));
        }
        Some(weights)
    }

    /// Exact best entry by (score desc, position asc), using `title_of` to
    /// fetch normalized titles by position.
    pub fn best<'a>(&self, query: &str, max_volume: usize, title_of: impl Fn(u32) -> &'a str) -> Option<(Score, u32)> {
        if self.lengths.is_empty() {
            return None;
        }
        let query_chars: Vec<char> = query.chars().collect();
        let qlen = query_chars.len();
        if let Some(&id) = self.exact.get(&title_hash(query)) {
            if title_of(id) == query {
                return Some((Score::new(0, qlen), id));
            }
        }

        let pattern = Pattern::new(query);
        let query_hist = histogram(&query_chars);
        let weights = self.gram_weights(&query_chars, max_volume);
        let q_total = gram_total(qlen);
        let lower_bound = |id: u32, len: usize, hist: &Histogram| {
            let bag = bag_bound(&query_hist, hist);
            // Each edit destroys at most Q grams of either string.
            let grams = weights
                .as_ref()
                .map_or(0, |w| q_total.max(gram_total(len)).saturating_sub(w[id as usize] as usize).div_ceil(Q));
            bag.max(grams)
        };

        let mut best: Option<(Score, u32)> = None;
        let offer = |best: &mut Option<(Score, u32)>, id: u32, hist: &Histogram| {
            let len = self.length_of(id);
            let max_len = qlen.max(len);
            if let Some((bs, bid)) = *best {
                let bound = Score::new(lower_bound(id, len, hist), max_len);
                if bound < bs || (bound == bs && id >= bid) {
                    return;
                }
            }
            let s = Score::new(pattern.distance(title_of(id)), max_len);
            match *best {
                Some((bs, bid)) if s < bs || (s == bs && id >= bid) => {}
                _ => *best = Some((s, id)),
            }
        };

        // Entries sharing the most grams make a strong first guess; offers
        // are order-independent, so this only sharpens pruning.
        if let Some(w) = &weights {
            if let Some(&top) = w.iter().max() {
                for (id, _) in w.iter().enumerate().filter(|(_, &x)| x == top).take(SEEDS) {
                    offer(&mut best, id as u32, &self.histograms[id]);
                }
            }
        }

        // Visit lengths by their similarity upper bound; stop once no
        // remaining length can tie the current best.
        let mut lengths: Vec<(Score, usize)> = (0..self.by_length.len())
            .filter(|&l| !self.by_length[l].is_empty())
            .map(|l| (Score::new(l.abs_diff(qlen), l.max(qlen)), l))
            .collect();
        lengths.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (bound, len) in lengths {
            if best.is_some_and(|(s, _)| bound < s) {
                break;
            }
            for (&id, hist) in self.by_length[len].iter().zip(&self.length_histograms[len]) {
                offer(&mut best, id, hist);
            }
        }
        best
    }
}
