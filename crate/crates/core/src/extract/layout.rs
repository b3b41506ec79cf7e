//! Glyphs to reading-ordered text lines.

use std::collections::{HashMap, HashSet};

use super::pdf::{Glyph, PageGlyphs};
use super::TextLine;
use crate::model::BoundingBox;

/// Baseline tolerance, as a fraction of font size.
const BASELINE_TOL: f64 = 0.3;
/// Horizontal gap (fraction of font size) that splits a baseline into fragments.
const FRAGMENT_GAP: f64 = 1.2;
/// Horizontal gap (fraction of font size) read as a word space.
const SPACE_GAP: f64 = 0.15;
/// Largest gap (fraction of font size) between a list marker and its entry text.
const MARKER_GAP: f64 = 4.0;
const DESCENT: f64 = 0.2;
const ASCENT: f64 = 0.8;

/// Page margin band inspected for running headers and footers, in points.
pub(crate) const MARGIN_BAND: f64 = 36.0;
/// A masked margin line on at least this many pages is boilerplate.
pub(crate) const REPEAT_PAGES: usize = 3;
const MIN_GUTTER: f64 = 8.0;
/// Box coordinates are snapped to 1/64 pt so they survive f32 round trips
/// through PDF annotation rectangles unchanged.
const GRID: f64 = 64.0;

fn snap(v: f64) -> f64 {
    (v * GRID).round() / GRID
}

#[derive(Debug, Clone)]
struct Fragment {
    text: String,
    x0: f64,
    x1: f64,
    baseline: f64,
    size: f64,
}

fn clean_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fragments(glyphs: &[Glyph]) -> Vec<Fragment> {
    let mut sorted: Vec<&Glyph> = glyphs.iter().filter(|g| g.size > 0.0).collect();
    sorted.sort_by(|a, b| b.baseline.total_cmp(&a.baseline).then(a.x.total_cmp(&b.x)));

    let mut clusters: Vec<Vec<&Glyph>> = Vec::new();
    let mut anchor = f64::INFINITY;
    for g in sorted {
        match clusters.last_mut() {
            Some(c) if anchor - g.baseline <= BASELINE_TOL * g.size.max(1.0) => c.push(g),
            _ => {
                anchor = g.baseline;
                clusters.push(vec![g]);
            }
        }
    }

    let mut out = Vec::new();
    for mut cluster in clusters {
        let cluster_start = out.len();
        cluster.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut current: Option<Fragment> = None;
        let mut pending_space = false;
        for g in cluster {
            if g.text.trim().is_empty() {
                pending_space = true;
                continue;
            }
            if let Some(f) = current.as_mut() {
                let gap = g.x - f.x1;
                let size = f.size.max(g.size);
                if gap > FRAGMENT_GAP * size {
                    out.push(current.take().unwrap());
                } else {
                    if pending_space || gap > SPACE_GAP * size {
                        f.text.push(' ');
                    }
                    f.text.push_str(&g.text);
                    f.x1 = f.x1.max(g.x + g.advance);
                    f.size = size;
                    pending_space = false;
                    continue;
                }
            }
            current = Some(Fragment {
                text: g.text.clone(),
                x0: g.x,
                x1: g.x + g.advance,
                baseline: g.baseline,
                size: g.size,
            });
            pending_space = false;
        }
        out.extend(current);
        merge_markers(&mut out, cluster_start);
    }
    out
}

/// Reference markers ("[12]", "3.") set in their own hanging column are
/// rejoined with the entry text that follows on the same baseline.
fn merge_markers(frags: &mut Vec<Fragment>, from: usize) {
    let mut i = from;
    while i + 1 < frags.len() {
        let gap = frags[i + 1].x0 - frags[i].x1;
        if is_marker(&frags[i].text) && gap <= MARKER_GAP * frags[i].size {
            let next = frags.remove(i + 1);
            let f = &mut frags[i];
            f.text.push(' ');
            f.text.push_str(&next.text);
            f.x1 = next.x1;
            f.size = f.size.max(next.size);
        }
        i += 1;
    }
}

fn is_marker(text: &str) -> bool {
    let t = text.trim();
    (t.starts_with('[') && t.ends_with(']') && t.len() <= 14 && !t.contains(' '))
        || (t.ends_with('.') && (2..=4).contains(&t.len()) && t[..t.len() - 1].chars().all(|c| c.is_ascii_digit()))
}

#[derive(Debug, Clone, Copy)]
struct Gutter {
    mid: f64,
    /// Left edge of the right column.
    right: f64,
}

impl Gutter {
    /// Lines starting inside the band (outdented markers) go right when
    /// their centre lies in the right column.
    fn column_of(&self, f: &Fragment) -> usize {
        usize::from(f.x0 >= self.mid || (f.x0 + f.x1) / 2.0 >= self.right)
    }

    /// Whether a gutter found elsewhere in the document fits a page whose own
    /// evidence was too thin: some text on the right and almost none across.
    fn fits(&self, frags: &[Fragment], media: [f64; 4]) -> bool {
        let body: Vec<&Fragment> = frags
            .iter()
            .filter(|f| f.baseline < media[3] - MARGIN_BAND && f.baseline > media[1] + MARGIN_BAND)
            .collect();
        let crossing = body.iter().filter(|f| self.column_of(f) == 0 && f.x1 > self.mid).count();
        body.iter().any(|f| self.column_of(f) == 1) && crossing <= body.len() / 20
    }
}

/// Widest horizontal band in the middle half of the page crossed by at most a
/// handful of narrow lines (titles, centered captions) and with body lines on
/// both sides. Margin-band lines are ignored.
fn find_gutter(frags: &[Fragment], media: [f64; 4]) -> Option<Gutter> {
    let width = media[2] - media[0];
    let (lo, hi) = (media[0] + 0.25 * width, media[0] + 0.75 * width);
    let narrow: Vec<&Fragment> = frags
        .iter()
        .filter(|f| f.x1 - f.x0 <= 0.6 * width)
        .filter(|f| f.baseline < media[3] - MARGIN_BAND && f.baseline > media[1] + MARGIN_BAND)
        .collect();
    let allowed = narrow.len() / 20;
    let bins = (hi - lo).ceil() as usize;
    let mut cover = vec![0usize; bins];
    for f in &narrow {
        let a = ((f.x0 - lo).floor().max(0.0) as usize).min(bins);
        let b = ((f.x1 - lo).ceil().max(0.0) as usize).min(bins);
        for c in &mut cover[a..b] {
            *c += 1;
        }
    }

    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for i in 0..=bins {
        let open = cover.get(i).is_some_and(|&c| c <= allowed);
        match (open, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - s > b - a) {
                    best = Some((s, i));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    let (s, e) = best?;
    let (g0, g1) = (lo + s as f64, lo + e as f64);
    if g1 - g0 < MIN_GUTTER {
        return None;
    }
    let gutter = Gutter { mid: (g0 + g1) / 2.0, right: g1 };
    let left = narrow.iter().filter(|f| f.x1 <= g0 + 0.5).count();
    let right = narrow.iter().filter(|f| f.x0 >= g0 - 0.5 && gutter.column_of(f) == 1).count();
    (left >= 3 && right >= 3).then_some(gutter)
}

fn mask_digits(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_digits = false;
    for c in s.chars() {
        if c.is_ascii_digit() {
            if !in_digits {
                out.push('#');
            }
            in_digits = true;
        } else {
            out.push(c);
            in_digits = false;
        }
    }
    out
}

struct PlacedLine {
    line: TextLine,
    baseline: f64,
    in_band: bool,
}

/// Builds reading-ordered lines for every page and drops running headers and
/// footers (margin-band lines whose digit-masked text repeats on enough pages).
pub(crate) fn build_lines(pages: &[PageGlyphs]) -> Vec<TextLine> {
    let page_frags: Vec<Vec<Fragment>> = pages
        .iter()
        .map(|page| {
            fragments(&page.glyphs)
                .into_iter()
                .map(|mut f| {
                    f.text = clean_whitespace(&f.text);
                    f
                })
                .filter(|f| !f.text.is_empty())
                .collect()
        })
        .collect();
    let found: Vec<Option<Gutter>> = page_frags.iter().zip(pages).map(|(f, p)| find_gutter(f, p.media_box)).collect();

    let mut per_page: Vec<Vec<PlacedLine>> = Vec::with_capacity(pages.len());
    for (page_index, (page, frags)) in pages.iter().zip(page_frags).enumerate() {
        let media = page.media_box;
        // Sparse pages (a column's last few lines) borrow the nearest
        // detected gutter when it fits.
        let gutter = found[page_index].or_else(|| {
            let nearest = (0..found.len())
                .filter_map(|i| found[i].map(|g| (i.abs_diff(page_index), i, g)))
                .min_by_key(|&(d, i, _)| (d, i))?;
            Some(nearest.2).filter(|g| g.fits(&frags, media))
        });
        let mut lines: Vec<PlacedLine> = frags
            .into_iter()
            .map(|f| {
                let column_index = gutter.as_ref().map_or(0, |g| g.column_of(&f));
                let bbox = BoundingBox::new(
                    page_index,
                    snap(f.x0.clamp(media[0], media[2])),
                    snap((f.baseline - DESCENT * f.size).clamp(media[1], media[3])),
                    snap(f.x1.clamp(media[0], media[2])),
                    snap((f.baseline + ASCENT * f.size).clamp(media[1], media[3])),
                );
                let in_band = f.baseline >= media[3] - MARGIN_BAND || f.baseline <= media[1] + MARGIN_BAND;
                PlacedLine {
                    line: TextLine { page_index, bbox, text: f.text, column_index },
                    baseline: f.baseline,
                    in_band,
                }
            })
            .collect();
        lines.sort_by(|a, b| {
            a.line
                .column_index
                .cmp(&b.line.column_index)
                .then(b.baseline.total_cmp(&a.baseline))
                .then(a.line.bbox.x0.total_cmp(&b.line.bbox.x0))
        });
        per_page.push(lines);
    }

    let mut pages_per_key: HashMap<String, HashSet<usize>> = HashMap::new();
    for (page, lines) in per_page.iter().enumerate() {
        for l in lines.iter().filter(|l| l.in_band) {
            pages_per_key.entry(mask_digits(&l.line.text)).or_default().insert(page);
        }
    }
    per_page
        .into_iter()
        .flatten()
        .filter(|l| !l.in_band || pages_per_key[&mask_digits(&l.line.text)].len() < REPEAT_PAGES)
        .map(|l| l.line)
        .collect()
}
