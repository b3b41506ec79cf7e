//! Deterministic synthetic papers, references and title databases.
//!
//! Used by tests, benchmarks and the acceptance suite. Every PDF is rendered
//! with the standard Helvetica font in WinAnsi encoding, so expected entry
//! text, titles and page placement are known exactly.

use std::collections::{BTreeSet, HashSet};

use lopdf::content::{Content, Operation};
use lopdf::{dictionary, Document, EncryptionState, EncryptionVersion, Object, Permissions, Stream, StringFormat};
use rand::prelude::*;
use rand::rngs::ChaCha8Rng;

use crate::bibdb::{BibDatabase, BibEntry};
use crate::matcher::{normalize_title, similarity};
use crate::metrics::{text_width, win_ansi_byte, win_ansi_widths};

pub const PAGE_WIDTH: f64 = 612.0;
pub const PAGE_HEIGHT: f64 = 792.0;
const MARGIN_X: f64 = 54.0;
const TOP_BASELINE: f64 = 720.0;
const BOTTOM_BASELINE: f64 = 72.0;
const COLUMN_GAP: f64 = 18.0;
const BODY_SIZE: f64 = 9.0;
const HEADING_SIZE: f64 = 12.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const GIVEN: &[&str] = &[
    "Ashish",
    "Noam",
    "Niki",
    "Jakob",
    "Llion",
    "Aidan",
    "Lukasz",
    "Illia",
    "Jacob",
    "Ming",
    "Kenton",
    "Kristina",
    "Yinhan",
    "Myle",
    "Naman",
    "Jingfei",
    "Mandar",
    "Danqi",
    "Omer",
    "Mike",
    "Luke",
    "Veselin",
    "Colin",
    "Adam",
    "Katherine",
    "Sharan",
    "Michael",
    "Yanqi",
    "Wei",
    "Peter",
    "Tom",
    "Benjamin",
    "Nick",
    "Jared",
    "Amanda",
    "Sandhini",
    "Ariel",
    "Gretchen",
    "Rewon",
    "Daniel",
    "Clemens",
    "Christopher",
    "Mark",
    "Eric",
    "Scott",
    "Hao",
    "Yuki",
    "Sofia",
    "Elena",
    "Marco",
    "Priya",
    "Arjun",
    "Fatima",
    "Omar",
    "Chloe",
    "Lucas",
    "Mateo",
    "Ingrid",
    "Kofi",
    "Amara",
];

const FAMILY: &[&str] = &[
    "Vaswani",
    "Shazeer",
    "Parmar",
    "Uszkoreit",
    "Jones",
    "Gomez",
    "Kaiser",
    "Polosukhin",
    "Devlin",
    "Chang",
    "Lee",
    "Toutanova",
    "Liu",
    "Ott",
    "Goyal",
    "Du",
    "Joshi",
    "Chen",
    "Levy",
    "Lewis",
    "Zettlemoyer",
    "Stoyanov",
    "Raffel",
    "Roberts",
    "Narang",
    "Matena",
    "Zhou",
    "Brown",
    "Mann",
    "Ryder",
    "Subbiah",
    "Kaplan",
    "Dhariwal",
    "Neelakantan",
    "Shyam",
    "Sastry",
    "Askell",
    "Agarwal",
    "Herbert-Voss",
    "Krueger",
    "Henighan",
    "Child",
    "Ramesh",
    "Ziegler",
    "Winter",
    "Hesse",
    "Sigler",
    "Litwin",
    "Gray",
    "Nakamura",
    "Rossi",
    "Bianchi",
    "Sharma",
    "Gupta",
    "Haddad",
    "Dubois",
    "Moreau",
    "Andersen",
    "Mensah",
    "Okafor",
    "van der Berg",
    "de Vries",
    "Garcia-Lopez",
    "Kowalski",
];

const ADJ: &[&str] = &[
    "neural",
    "robust",
    "efficient",
    "scalable",
    "sparse",
    "adaptive",
    "contrastive",
    "multilingual",
    "hierarchical",
    "probabilistic",
    "latent",
    "unsupervised",
    "semi-supervised",
    "self-supervised",
    "interpretable",
    "controllable",
    "structured",
    "compositional",
    "generative",
    "discriminative",
    "causal",
    "temporal",
    "cross-lingual",
    "low-resource",
    "faithful",
    "explainable",
    "incremental",
    "parallel",
    "distributed",
    "federated",
    "differentiable",
    "lightweight",
    "universal",
    "zero-shot",
    "few-shot",
    "dense",
    "recurrent",
    "convolutional",
    "graph-based",
    "retrieval-augmented",
    "multimodal",
    "open-domain",
    "fine-grained",
    "long-context",
    "calibrated",
    "modular",
    "continual",
    "symbolic",
    "hybrid",
    "variational",
    "adversarial",
    "conditional",
    "bidirectional",
    "character-level",
];

const NOUN: &[&str] = &[
    "transformers",
    "representations",
    "embeddings",
    "models",
    "networks",
    "parsing",
    "translation",
    "summarization",
    "retrieval",
    "alignment",
    "attention",
    "decoding",
    "tokenization",
    "segmentation",
    "classification",
    "generation",
    "reasoning",
    "inference",
    "grounding",
    "detection",
    "extraction",
    "recognition",
    "tagging",
    "benchmarks",
    "evaluation",
    "corpora",
    "agents",
    "policies",
    "graphs",
    "kernels",
    "objectives",
    "priors",
    "features",
    "experts",
    "adapters",
    "prompts",
    "hallucinations",
    "citations",
    "entities",
    "relations",
    "events",
    "dialogue",
    "questions",
    "documents",
    "sentences",
    "morphology",
    "syntax",
    "semantics",
    "encoders",
    "decoders",
    "memories",
    "rewards",
    "gradients",
    "distillation",
    "pretraining",
    "augmentation",
    "calibration",
    "uncertainty",
    "compression",
];

const TOPIC: &[&str] = &[
    "machine translation",
    "question answering",
    "named entity recognition",
    "dependency parsing",
    "speech recognition",
    "text classification",
    "information extraction",
    "code generation",
    "sentiment analysis",
    "language modeling",
    "image captioning",
    "fact verification",
    "relation extraction",
    "coreference resolution",
    "semantic parsing",
    "dialogue systems",
    "document understanding",
    "citation analysis",
    "program synthesis",
    "knowledge graphs",
    "entity linking",
    "text simplification",
    "commonsense reasoning",
    "math word problems",
];

const SUFFIX: &[&str] = &[
    "at scale",
    "across languages",
    "under distribution shift",
    "with limited supervision",
    "without labels",
    "from noisy data",
    "via contrastive learning",
    "through the lens of probing",
    "beyond accuracy",
    "on a budget",
    "in low-resource settings",
    "with human feedback",
    "for long documents",
    "under adversarial attack",
];

const VERBING: &[&str] = &[
    "learning",
    "scaling",
    "improving",
    "rethinking",
    "revisiting",
    "evaluating",
    "measuring",
    "understanding",
    "probing",
    "distilling",
    "training",
    "pretraining",
    "benchmarking",
    "analyzing",
    "explaining",
    "compressing",
];

const VERB: &[&str] = &["learn", "encode", "capture", "understand", "need", "memorize", "represent", "require"];

const SMALL_WORDS: &[&str] = &[
    "a", "an", "the", "of", "for", "with", "in", "on", "at", "to", "via", "and", "or", "under", "across", "from",
    "without", "through", "beyond", "is", "are",
];

const VENUES: &[&str] = &[
    "the Annual Meeting of the Association for Computational Linguistics",
    "the Conference on Empirical Methods in Natural Language Processing",
    "the International Conference on Machine Learning",
    "the Conference on Neural Information Processing Systems",
    "the International Conference on Learning Representations",
    "the North American Chapter of the Association for Computational Linguistics",
    "the AAAI Conference on Artificial Intelligence",
    "the International Joint Conference on Artificial Intelligence",
    "the Conference on Computational Natural Language Learning",
];

const SHORT_VENUES: &[&str] = &["ACL", "EMNLP", "ICML", "NeurIPS", "ICLR", "NAACL", "AAAI", "IJCAI", "CoNLL"];

const JOURNALS: &[&str] = &[
    "Transactions of the Association for Computational Linguistics",
    "Journal of Machine Learning Research",
    "Computational Linguistics",
    "Artificial Intelligence",
    "Neural Computation",
    "Machine Learning",
];

const BODY_WORDS: &[&str] = &[
    "we",
    "propose",
    "a",
    "method",
    "that",
    "improves",
    "the",
    "robustness",
    "of",
    "models",
    "on",
    "several",
    "tasks",
    "our",
    "results",
    "show",
    "consistent",
    "gains",
    "over",
    "strong",
    "baselines",
    "this",
    "paper",
    "studies",
    "how",
    "data",
    "and",
    "training",
    "affect",
    "performance",
    "in",
    "practice",
    "experiments",
    "confirm",
    "analysis",
    "suggests",
    "further",
    "work",
    "is",
    "needed",
    "to",
    "understand",
    "these",
    "effects",
    "across",
    "languages",
    "settings",
    "with",
    "limited",
    "supervision",
    "each",
    "component",
    "contributes",
    "final",
    "accuracy",
    "while",
    "keeping",
    "inference",
    "cost",
    "low",
];

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty list")
}

fn capitalize(word: &str) -> String {
    word.split('-')
        .map(|part| {
            let mut c = part.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join("-")
}

fn acronym<R: Rng + ?Sized>(rng: &mut R) -> String {
    let len = rng.random_range(3..=6);
    let mut s: String = (0..len).map(|_| (b'A' + rng.random_range(0..26u8)) as char).collect();
    if rng.random_bool(0.2) {
        s.push_str(&rng.random_range(2..10).to_string());
    }
    s
}

/// A plausible paper title (ASCII only, no commas or periods).
pub fn random_title<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut words: Vec<String> = Vec::new();
    let mut push = |s: &str| words.extend(s.split(' ').map(str::to_string));
    let question = rng.random_bool(0.05);
    let mut prefix: Option<String> = None;
    if question {
        push("do");
        push(pick(rng, ADJ));
        push(pick(rng, NOUN));
        push(pick(rng, VERB));
        push(pick(rng, NOUN));
    } else {
        if rng.random_bool(0.25) {
            prefix = Some(acronym(rng));
        }
        match rng.random_range(0..5) {
            0 => {
                push(pick(rng, ADJ));
                push(pick(rng, NOUN));
                push("for");
                push(pick(rng, TOPIC));
            }
            1 => {
                push("on the");
                push(pick(rng, NOUN));
                push("of");
                push(pick(rng, ADJ));
                push(pick(rng, NOUN));
            }
            2 => {
                push("towards");
                push(pick(rng, ADJ));
                push(pick(rng, NOUN));
                push(pick(rng, SUFFIX));
            }
            3 => {
                push(pick(rng, VERBING));
                push(pick(rng, ADJ));
                push(pick(rng, NOUN));
                push("with");
                push(pick(rng, ADJ));
                push(pick(rng, NOUN));
            }
            _ => {
                push(pick(rng, VERBING));
                push(pick(rng, NOUN));
                push("for");
                push(pick(rng, TOPIC));
                push(pick(rng, SUFFIX));
            }
        }
        if rng.random_bool(0.3) {
            let at = rng.random_range(0..words.len());
            if !SMALL_WORDS.contains(&words[at].as_str()) {
                words.insert(at, pick(rng, ADJ).to_string());
            }
        }
    }
    let title_case = rng.random_bool(0.6);
    let cased: Vec<String> = words
        .iter()
        .enumerate()
        .map(
            |(i, w)| {
                if i == 0 || (title_case && !SMALL_WORDS.contains(&w.as_str())) {
                    capitalize(w)
                } else {
                    w.clone()
                }
            },
        )
        .collect();
    let mut title = cased.join(" ");
    if question {
        title.push('?');
    }
    match prefix {
        Some(p) => format!("{p}: {title}"),
        None => title,
    }
}

/// `n` distinct titles (distinct after normalization).
pub fn fixture_titles(n: usize, seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = random_title(&mut rng);
        if seen.insert(normalize_title(&t)) {
            out.push(t);
        }
    }
    out
}

/// Database of `n` generated titles with ids `{name}-000000`, ...
pub fn fixture_database(name: &str, n: usize, seed: u64) -> BibDatabase {
    let entries = fixture_titles(n, seed)
        .into_iter()
        .enumerate()
        .map(|(i, t)| BibEntry::new(format!("{name}-{i:06}"), t))
        .collect();
    BibDatabase::from_entries(name, entries).expect("generated ids are unique")
}

/// Titles whose best similarity against every entry of `db` is below
/// `threshold`, checked by exhaustive scan.
pub fn fabricated_titles<R: Rng + ?Sized>(rng: &mut R, db: &BibDatabase, k: usize, threshold: f64) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    while out.len() < k {
        let t = random_title(rng);
        let norm = normalize_title(&t);
        let near = db.entries().iter().any(|e| similarity(&norm, &e.normalized_title) >= threshold)
            || out.iter().any(|o| normalize_title(o) == norm);
        if !near {
            out.push(t);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Author {
    pub given: String,
    pub family: String,
}

impl Author {
    fn initial(&self) -> String {
        format!("{}.", self.given.chars().next().unwrap_or('X'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Venue {
    Proceedings { long: String, short: String },
    Journal { name: String, volume: u32, issue: u32 },
    Arxiv { id: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub authors: Vec<Author>,
    pub year: u16,
    pub title: String,
    pub venue: Venue,
    pub pages: (u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefStyle {
    /// Author-year entries with a hanging indent (ACL).
    AuthorYear,
    /// `[n]` markers, quoted titles (IEEE).
    Bracketed,
    /// `n.` markers, `Family, G.:` authors (LNCS).
    Numbered,
}

impl RefStyle {
    pub const ALL: [RefStyle; 3] = [RefStyle::AuthorYear, RefStyle::Bracketed, RefStyle::Numbered];
}

/// A reference with random authors and venue around `title`.
pub fn random_reference<R: Rng + ?Sized>(rng: &mut R, title: &str) -> Reference {
    let n_authors = rng.random_range(1..=4);
    let authors = (0..n_authors)
        .map(|_| Author { given: pick(rng, GIVEN).to_string(), family: pick(rng, FAMILY).to_string() })
        .collect();
    let venue = match rng.random_range(0..10) {
        0..=5 => {
            let i = rng.random_range(0..VENUES.len());
            Venue::Proceedings { long: VENUES[i].to_string(), short: SHORT_VENUES[i].to_string() }
        }
        6..=8 => Venue::Journal {
            name: pick(rng, JOURNALS).to_string(),
            volume: rng.random_range(1..60),
            issue: rng.random_range(1..12),
        },
        _ => Venue::Arxiv {
            id: format!(
                "{:02}{:02}.{:05}",
                rng.random_range(15..25),
                rng.random_range(1..13),
                rng.random_range(0..100000)
            ),
        },
    };
    let start = rng.random_range(1..9000);
    Reference {
        authors,
        year: rng.random_range(1995..2026),
        title: title.to_string(),
        venue,
        pages: (start, start + rng.random_range(5..20)),
    }
}

fn join_authors(names: &[String], sep_last: &str) -> String {
    match names {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}{sep_last}{last}", init.join(", ")),
    }
}

impl Reference {
    /// Entry text without any list marker.
    pub fn render(&self, style: RefStyle) -> String {
        let (p0, p1) = self.pages;
        let q = self.title.ends_with('?');
        match style {
            RefStyle::AuthorYear => {
                let names: Vec<String> = self.authors.iter().map(|a| format!("{} {}", a.given, a.family)).collect();
                let title_end = if q { "" } else { "." };
                let venue = match &self.venue {
                    Venue::Proceedings { long, .. } => format!("In Proceedings of {long}, pages {p0}–{p1}."),
                    Venue::Journal { name, volume, issue } => format!("{name}, {volume}({issue}):{p0}–{p1}."),
                    Venue::Arxiv { id } => format!("arXiv preprint arXiv:{id}."),
                };
                format!("{}. {}. {}{title_end} {venue}", join_authors(&names, ", and "), self.year, self.title)
            }
            RefStyle::Bracketed => {
                let names: Vec<String> = self.authors.iter().map(|a| format!("{} {}", a.initial(), a.family)).collect();
                let title = if q { format!("“{}”", self.title) } else { format!("“{},”", self.title) };
                let venue = match &self.venue {
                    Venue::Proceedings { short, .. } => format!("in Proc. {short}, {}, pp. {p0}–{p1}.", self.year),
                    Venue::Journal { name, volume, issue } => {
                        format!("{name}, vol. {volume}, no. {issue}, pp. {p0}–{p1}, {}.", self.year)
                    }
                    Venue::Arxiv { id } => format!("arXiv:{id}, {}.", self.year),
                };
                format!("{}, {title} {venue}", join_authors(&names, ", and "))
            }
            RefStyle::Numbered => {
                let names: Vec<String> =
                    self.authors.iter().map(|a| format!("{}, {}", a.family, a.initial())).collect();
                let title_end = if q { "" } else { "." };
                let venue = match &self.venue {
                    Venue::Proceedings { short, .. } => format!("In: Proc. {short}. pp. {p0}–{p1} ({})", self.year),
                    Venue::Journal { name, volume, issue } => {
                        format!("{name} {volume}({issue}), {p0}–{p1} ({})", self.year)
                    }
                    Venue::Arxiv { id } => format!("arXiv preprint arXiv:{id} ({})", self.year),
                };
                format!("{}: {}{title_end} {venue}", names.join(", "), self.title)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub style: RefStyle,
    /// 1 or 2.
    pub columns: usize,
    /// Pages of body text before the references.
    pub body_pages: usize,
    /// A table of contents on the first page that lists "References".
    pub toc_mention: bool,
    /// An appendix heading and text after the references.
    pub appendix: bool,
    pub running_header: bool,
    pub page_numbers: bool,
    /// Break long lowercase words across lines with a hyphen.
    pub hyphenate: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            style: RefStyle::AuthorYear,
            columns: 1,
            body_pages: 1,
            toc_mention: false,
            appendix: false,
            running_header: false,
            page_numbers: false,
            hyphenate: false,
        }
    }
}

/// What the extractor should recover for one rendered reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenEntry {
    pub raw_text: String,
    pub title: String,
    pub line_count: usize,
    pub pages: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthDocument {
    pub bytes: Vec<u8>,
    pub page_count: usize,
    pub entries: Vec<GoldenEntry>,
    /// Number of text lines in the reference region (between the heading and
    /// the appendix or the end).
    pub region_lines: usize,
}

struct Item {
    x: f64,
    y: f64,
    size: f64,
    text: String,
}

struct Writer {
    columns: usize,
    pages: Vec<Vec<Item>>,
    column: usize,
    y: f64,
}

impl Writer {
    fn new(columns: usize) -> Self {
        Self { columns, pages: vec![Vec::new()], column: 0, y: TOP_BASELINE }
    }

    fn column_width(&self) -> f64 {
        if self.columns == 2 {
            (PAGE_WIDTH - 2.0 * MARGIN_X - COLUMN_GAP) / 2.0
        } else {
            PAGE_WIDTH - 2.0 * MARGIN_X
        }
    }

    fn column_x(&self) -> f64 {
        MARGIN_X + self.column as f64 * (self.column_width() + COLUMN_GAP)
    }

    fn page(&self) -> usize {
        self.pages.len() - 1
    }

    fn break_column(&mut self) {
        if self.column + 1 < self.columns {
            self.column += 1;
        } else {
            self.column = 0;
            self.pages.push(Vec::new());
        }
        self.y = TOP_BASELINE;
    }

    /// Reserves one line of `size`; returns (page, baseline, column x).
    fn next_line(&mut self, size: f64) -> (usize, f64, f64) {
        let leading = size * 1.25;
        if self.y < BOTTOM_BASELINE {
            self.break_column();
        }
        let y = self.y;
        self.y -= leading;
        (self.page(), y, self.column_x())
    }

    fn put(&mut self, page: usize, x: f64, y: f64, size: f64, text: &str) {
        self.pages[page].push(Item { x, y, size, text: text.to_string() });
    }

    fn skip(&mut self, points: f64) {
        self.y -= points;
    }

    fn heading(&mut self, text: &str) {
        self.skip(4.0);
        if self.y < BOTTOM_BASELINE + 30.0 {
            self.break_column();
        }
        let (page, y, x) = self.next_line(HEADING_SIZE);
        self.put(page, x, y, HEADING_SIZE, text);
        self.skip(2.0);
    }

    fn paragraph(&mut self, text: &str, hyphenate: bool) {
        let width = self.column_width();
        for line in wrap(text, BODY_SIZE, width, width, hyphenate) {
            let (page, y, x) = self.next_line(BODY_SIZE);
            self.put(page, x, y, BODY_SIZE, &line);
        }
        self.skip(4.0);
    }
}

fn splittable(word: &str) -> bool {
    word.chars().count() >= 7 && word.chars().all(|c| c.is_ascii_lowercase())
}

/// Greedy line breaking. Lines after the first get `rest_width`.
fn wrap(text: &str, size: f64, first_width: f64, rest_width: f64, hyphenate: bool) -> Vec<String> {
    let mut lines = Vec::new();
    let mut line = String::new();
    let mut words: Vec<String> = text.split(' ').map(str::to_string).collect();
    words.reverse();
    while let Some(word) = words.pop() {
        let width = if lines.is_empty() { first_width } else { rest_width };
        let candidate = if line.is_empty() { word.clone() } else { format!("{line} {word}") };
        if text_width(&candidate, size) <= width || line.is_empty() && !hyphenate {
            line = candidate;
            continue;
        }
        if hyphenate && splittable(&word) {
            let chars: Vec<char> = word.chars().collect();
            let fit = (3..=chars.len() - 3).rev().find(|&k| {
                let head: String = chars[..k].iter().collect();
                let attempt = if line.is_empty() { format!("{head}-") } else { format!("{line} {head}-") };
                text_width(&attempt, size) <= width
            });
            if let Some(k) = fit {
                let head: String = chars[..k].iter().collect();
                let tail: String = chars[k..].iter().collect();
                lines.push(if line.is_empty() { format!("{head}-") } else { format!("{line} {head}-") });
                line = String::new();
                words.push(tail);
                continue;
            }
        }
        if line.is_empty() {
            line = word;
        } else {
            lines.push(std::mem::take(&mut line));
            words.push(word);
        }
    }
    if !line.is_empty() {
        lines.push(line);
    }
    lines
}

fn body_sentence<R: Rng + ?Sized>(rng: &mut R) -> String {
    let n = rng.random_range(8..20);
    let words: Vec<&str> = (0..n).map(|_| pick(rng, BODY_WORDS)).collect();
    let mut s = capitalize(words[0]);
    for w in &words[1..] {
        s.push(' ');
        s.push_str(w);
    }
    s.push('.');
    s
}

fn body_paragraph<R: Rng + ?Sized>(rng: &mut R) -> String {
    (0..rng.random_range(3..6)).map(|_| body_sentence(rng)).collect::<Vec<_>>().join(" ")
}

const SECTIONS: &[&str] =
    &["Introduction", "Related Work", "Method", "Experiments", "Analysis", "Discussion", "Conclusion"];

/// Renders a paper whose reference list holds `refs` in order.
pub fn build_paper(refs: &[Reference], opts: &SynthOptions, seed: u64) -> SynthDocument {
    let mut rng = rng(seed);
    let mut w = Writer::new(opts.columns.clamp(1, 2));

    // Title block, centered over both columns.
    let title = "A Synthetic Study of Reference Lists";
    let tx = (PAGE_WIDTH - text_width(title, 14.0)) / 2.0;
    w.put(0, tx, 750.0, 14.0, title);
    let names = "Anonymous Authors";
    w.put(0, (PAGE_WIDTH - text_width(names, 10.0)) / 2.0, 734.0, 10.0, names);
    w.y = 706.0;

    if opts.toc_mention {
        w.heading("Contents");
        for entry in ["1 Introduction", "2 Related Work", "3 Method", "References"] {
            let (page, y, x) = w.next_line(BODY_SIZE);
            w.put(page, x, y, BODY_SIZE, entry);
        }
        w.skip(6.0);
    }

    let mut section = 0;
    while w.page() < opts.body_pages {
        w.heading(&format!("{} {}", section + 1, SECTIONS[section % SECTIONS.len()]));
        section += 1;
        for _ in 0..3 {
            let p = body_paragraph(&mut rng);
            w.paragraph(&p, opts.hyphenate);
        }
    }

    w.heading("References");
    let col_w = w.column_width();
    let mut entries = Vec::with_capacity(refs.len());
    let mut region_lines = 0;
    for (i, r) in refs.iter().enumerate() {
        let text = r.render(opts.style);
        let (marker, indent_first, indent_rest) = match opts.style {
            RefStyle::AuthorYear => (None, 0.0, 10.0),
            RefStyle::Bracketed => (Some(format!("[{}]", i + 1)), 22.0, 22.0),
            RefStyle::Numbered => (Some(format!("{}.", i + 1)), 15.0, 15.0),
        };
        let lines = wrap(&text, BODY_SIZE, col_w - indent_first, col_w - indent_rest, opts.hyphenate);
        let mut pages = BTreeSet::new();
        for (k, line) in lines.iter().enumerate() {
            let (page, y, x) = w.next_line(BODY_SIZE);
            pages.insert(page);
            if k == 0 {
                if let Some(m) = &marker {
                    w.put(page, x, y, BODY_SIZE, m);
                }
                w.put(page, x + indent_first, y, BODY_SIZE, line);
            } else {
                w.put(page, x + indent_rest, y, BODY_SIZE, line);
            }
        }
        region_lines += lines.len();
        entries.push(GoldenEntry { raw_text: text, title: r.title.clone(), line_count: lines.len(), pages });
        w.skip(1.0);
    }

    if opts.appendix {
        w.skip(8.0);
        w.heading("A Additional Results");
        for _ in 0..2 {
            let p = body_paragraph(&mut rng);
            w.paragraph(&p, opts.hyphenate);
        }
    }

    let page_count = w.pages.len();
    for (i, items) in w.pages.iter_mut().enumerate() {
        if opts.running_header {
            let h = "Synthetic Workshop on Citation Checking";
            items.push(Item { x: (PAGE_WIDTH - text_width(h, 8.0)) / 2.0, y: 770.0, size: 8.0, text: h.into() });
        }
        if opts.page_numbers {
            let n = (i + 1).to_string();
            items.push(Item { x: (PAGE_WIDTH - text_width(&n, 9.0)) / 2.0, y: 30.0, size: 9.0, text: n });
        }
    }

    SynthDocument { bytes: render_pdf(&w.pages), page_count, entries, region_lines }
}

fn encode_win_ansi(s: &str) -> Vec<u8> {
    s.chars().map(|c| win_ansi_byte(c).unwrap_or(b'?')).collect()
}

fn render_pdf(pages: &[Vec<Item>]) -> Vec<u8> {
    let mut doc = Document::with_version("1.5");
    let pages_id = doc.new_object_id();
    let widths: Vec<Object> = win_ansi_widths(32, 255).into_iter().map(|w| Object::Integer(w as i64)).collect();
    let font_id = doc.add_object(dictionary! {
        "Type" => "Font",
        "Subtype" => "Type1",
        "BaseFont" => "Helvetica",
        "Encoding" => "WinAnsiEncoding",
        "FirstChar" => 32,
        "LastChar" => 255,
        "Widths" => widths,
    });
    let resources_id = doc.add_object(dictionary! { "Font" => dictionary! { "F1" => font_id } });
    let mut kids = Vec::with_capacity(pages.len());
    for items in pages {
        let mut ops = Vec::with_capacity(items.len() * 5);
        for it in items {
            ops.push(Operation::new("BT", vec![]));
            ops.push(Operation::new("Tf", vec!["F1".into(), Object::Real(it.size as f32)]));
            ops.push(Operation::new("Td", vec![Object::Real(it.x as f32), Object::Real(it.y as f32)]));
            ops.push(Operation::new("Tj", vec![Object::String(encode_win_ansi(&it.text), StringFormat::Literal)]));
            ops.push(Operation::new("ET", vec![]));
        }
        let content = Content { operations: ops }.encode().expect("content encodes");
        let content_id = doc.add_object(Stream::new(dictionary! {}, content));
        kids.push(Object::Reference(doc.add_object(dictionary! {
            "Type" => "Page",
            "Parent" => pages_id,
            "Contents" => content_id,
        })));
    }
    let count = kids.len() as i64;
    doc.objects.insert(
        pages_id,
        Object::Dictionary(dictionary! {
            "Type" => "Pages",
            "Kids" => kids,
            "Count" => count,
            "Resources" => resources_id,
            "MediaBox" => vec![0.into(), 0.into(), Object::Real(PAGE_WIDTH as f32), Object::Real(PAGE_HEIGHT as f32)],
        }),
    );
    let catalog = doc.add_object(dictionary! { "Type" => "Catalog", "Pages" => pages_id });
    doc.trailer.set("Root", catalog);
    let mut out = Vec::new();
    doc.save_to(&mut out).expect("in-memory save");
    out
}

/// A one-page PDF with drawing operators but no text (a stand-in for a scan).
pub fn image_only_pdf() -> Vec<u8> {
    let mut doc = Document::with_version("1.5");
    let pages_id = doc.new_object_id();
    let content = Content {
        operations: vec![
            Operation::new("re", vec![72.into(), 72.into(), 400.into(), 600.into()]),
            Operation::new("f", vec![]),
        ],
    };
    let cid = doc.add_object(Stream::new(dictionary! {}, content.encode().expect("content encodes")));
    let page = doc.add_object(dictionary! { "Type" => "Page", "Parent" => pages_id, "Contents" => cid });
    doc.objects.insert(
        pages_id,
        Object::Dictionary(dictionary! {
            "Type" => "Pages",
            "Kids" => vec![page.into()],
            "Count" => 1,
            "MediaBox" => vec![0.into(), 0.into(), 612.into(), 792.into()],
        }),
    );
    let catalog = doc.add_object(dictionary! { "Type" => "Catalog", "Pages" => pages_id });
    doc.trailer.set("Root", catalog);
    let mut out = Vec::new();
    doc.save_to(&mut out).expect("in-memory save");
    out
}

/// Password-protects a PDF (RC4, 128-bit key) with a non-empty user password.
pub fn encrypt_pdf(bytes: &[u8], user_password: &str) -> Vec<u8> {
    let mut doc = Document::load_mem(bytes).expect("valid input PDF");
    let id = Object::String(b"citecheck-fixture".to_vec(), StringFormat::Literal);
    doc.trailer.set("ID", vec![id.clone(), id]);
    let state = EncryptionState::try_from(EncryptionVersion::V2 {
        document: &doc,
        owner_password: "owner",
        user_password,
        key_length: 128,
        permissions: Permissions::all(),
    })
    .expect("encryption state");
    doc.encrypt(&state).expect("encrypt");
    let mut out = Vec::new();
    doc.save_to(&mut out).expect("in-memory save");
    out
}
