#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use citecheck_core::bibdb::{self, BibEntry, IngestOptions};
use citecheck_core::matcher::normalize_title;
use citecheck_core::synth::{self, RefStyle, SynthDocument, SynthOptions};

pub const FIXED_TIME: &str = "2026-01-01T00:00:00Z";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_citecheck"))
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Row-by-row edit distance over chars.
pub fn dp_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.chars().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(ca != cb)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn dp_similarity(a: &str, b: &str) -> f64 {
    let m = a.chars().count().max(b.chars().count());
    if m == 0 {
        1.0
    } else {
        1.0 - dp_distance(a, b) as f64 / m as f64
    }
}

/// Exhaustive scan: best similarity, smallest id on ties.
pub fn oracle_best(query: &str, entries: &[BibEntry]) -> (f64, String) {
    let q = normalize_title(query);
    let qlen = q.chars().count();
    let mut best = (-1.0f64, String::new());
    for e in entries {
        let elen = e.normalized_title.chars().count();
        let m = qlen.max(elen);
        // Length difference alone bounds the distance from below.
        if m > 0 && 1.0 - (qlen.abs_diff(elen) as f64 / m as f64) < best.0 - 1e-12 {
            continue;
        }
        let s = dp_similarity(&q, &e.normalized_title);
        if s > best.0 + 1e-12 || ((s - best.0).abs() <= 1e-12 && e.id < best.1) {
            best = (s, e.id.clone());
        }
    }
    best
}

/// Writes a TSV dump of `titles` and ingests it as database `name` under `dir`.
pub fn ingest_titles(dir: &Path, name: &str, titles: &[String]) -> PathBuf {
    let mut tsv = String::from("id\ttitle\n");
    for (i, t) in titles.iter().enumerate() {
        let _ = writeln!(tsv, "{name}-{i:06}\t{t}");
    }
    let src = dir.join(format!("{name}.tsv"));
    std::fs::write(&src, tsv).unwrap();
    let out = dir.join(name);
    let opts = IngestOptions { created_at: Some(FIXED_TIME.into()), ..IngestOptions::default() };
    bibdb::ingest(&src, name, &out, &opts).unwrap();
    out
}

/// A rendered paper citing `titles` in order.
pub fn paper(titles: &[String], opts: &SynthOptions, seed: u64) -> SynthDocument {
    let mut rng = synth::rng(seed);
    let refs: Vec<_> = titles.iter().map(|t| synth::random_reference(&mut rng, t)).collect();
    synth::build_paper(&refs, opts, seed)
}

pub fn options(k: usize) -> SynthOptions {
    SynthOptions { style: RefStyle::ALL[k % 3], columns: 1 + k % 2, ..SynthOptions::default() }
}

pub struct Fixture {
    pub _dir: tempfile::TempDir,
    pub root: PathBuf,
    pub db: PathBuf,
    pub clean: PathBuf,
    pub fabricated: PathBuf,
    pub fake_titles: Vec<String>,
    pub fake_boxes: usize,
}

/// A 200-title database, a clean paper and a paper citing two fabricated titles.
pub fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let titles = synth::fixture_titles(200, 42);
    let db = ingest_titles(&root, "fixture", &titles);
    let loaded = citecheck_core::bibdb::load(&db).unwrap();

    let clean_doc = paper(&titles[..20], &options(0), 1);
    let clean = root.join("clean.pdf");
    std::fs::write(&clean, &clean_doc.bytes).unwrap();

    let fake_titles = synth::fabricated_titles(&mut synth::rng(7), &loaded, 2, 0.9);
    let mut cited: Vec<String> = titles[20..38].to_vec();
    cited.insert(5, fake_titles[0].clone());
    cited.push(fake_titles[1].clone());
    let fab_doc = paper(&cited, &options(1), 2);
    let fake_boxes = fab_doc.entries.iter().filter(|e| fake_titles.contains(&e.title)).map(|e| e.line_count).sum();
    let fabricated = root.join("fabricated.pdf");
    std::fs::write(&fabricated, &fab_doc.bytes).unwrap();
    Fixture { _dir: dir, root, db, clean, fabricated, fake_titles, fake_boxes }
}
