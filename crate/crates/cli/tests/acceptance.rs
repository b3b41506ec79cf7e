//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use citecheck_core::bibdb::{self, BibDatabase, BibEntry};
use citecheck_core::extract::{self, locate_reference_section, read_document_bytes, segment_entries};
use citecheck_core::matcher::{find_best_match, levenshtein, similarity, verify_partition, MatcherConfig};
use citecheck_core::model::{Citation, FieldTag};
use citecheck_core::pipeline::run_bytes;
use citecheck_core::recognize::{assemble_fields, tokenize, RuleLabeler};
use citecheck_core::report::without_volatile_fields;
use citecheck_core::synth::{self, RefStyle, SynthOptions};
use common::*;
use rand::prelude::*;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_db() -> &'static BibDatabase {
    static DB: std::sync::OnceLock<BibDatabase> = std::sync::OnceLock::new();
    DB.get_or_init(|| synth::fixture_database("fixture", 10_000, 2024))
}

/// Brute-force edit distance by memoized recursion over suffixes.
fn brute_distance(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return a.len() + b.len();
    }
    if let Some(&d) = memo.get(&(a.len(), b.len())) {
        return d;
    }
    let d = (brute_distance(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]))
        .min(brute_distance(&a[1..], b, memo) + 1)
        .min(brute_distance(a, &b[1..], memo) + 1);
    memo.insert((a.len(), b.len()), d);
    d
}

fn seeded_corpus() -> Outcome {
    let start = Instant::now();
    let db = fixture_db();
    let mut checked_fakes = 0;
    let mut pipeline = Duration::ZERO;
    for doc in 0..20u64 {
        let mut rng = synth::rng(1000 + doc);
        let mut titles: Vec<String> =
            sample(&mut rng, db.len(), 45).into_iter().map(|i| db.entries()[i].title.clone()).collect();
        let fakes = synth::fabricated_titles(&mut rng, db, 5, 0.9);
        for f in &fakes {
            let (score, _) = oracle_best(f, db.entries());
            ensure(score < 0.9, || format!("fabricated title {f:?} scores {score} against the fixture DB"))?;
            checked_fakes += 1;
        }
        for f in &fakes {
            let at = rng.random_range(0..=titles.len());
            titles.insert(at, f.clone());
        }
        let opts = options(doc as usize);
        let rendered = paper(&titles, &opts, doc);

        let t = Instant::now();
        let outcome =
            run_bytes(&rendered.bytes, "doc", std::slice::from_ref(db), &RuleLabeler, &MatcherConfig::default())
                .map_err(|e| format!("doc {doc}: {e}"))?;
        pipeline += t.elapsed();

        let flagged: BTreeSet<&str> = outcome.flagged.iter().map(|c| c.title.as_str()).collect();
        let expected: BTreeSet<&str> = fakes.iter().map(String::as_str).collect();
        ensure(outcome.extracted == 50, || format!("doc {doc}: extracted {}", outcome.extracted))?;
        ensure(outcome.unverifiable.is_empty(), || format!("doc {doc}: {} unverifiable", outcome.unverifiable.len()))?;
        ensure(flagged == expected, || {
            format!("doc {doc} ({:?}, {} col): flagged {flagged:?}, expected {expected:?}", opts.style, opts.columns)
        })?;
    }
    let total = start.elapsed();
    ensure(total < Duration::from_secs(60), || format!("took {total:.1?}"))?;
    Ok(format!("20 docs, 100/100 fabricated flagged, 0/900 clean flagged, {checked_fakes} fakes oracle-checked < 0.9; pipeline {pipeline:.2?}, total {total:.1?}"))
}

/// Titles of mixed length: short phrases, generated titles and concatenations.
fn mixed_title(rng: &mut impl Rng) -> String {
    match rng.random_range(0..4) {
        0 => synth::random_title(rng).split(' ').take(rng.random_range(1..4)).collect::<Vec<_>>().join(" "),
        1 => format!("{} {}", synth::random_title(rng), synth::random_title(rng)),
        _ => synth::random_title(rng),
    }
}

fn mutate(rng: &mut impl Rng, s: &str, edits: usize) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    for _ in 0..edits {
        let c = (b'a' + rng.random_range(0..26u8)) as char;
        match rng.random_range(0..3) {
            0 if !chars.is_empty() => {
                let i = rng.random_range(0..chars.len());
                chars[i] = c;
            }
            1 if !chars.is_empty() => {
                chars.remove(rng.random_range(0..chars.len()));
            }
            _ => chars.insert(rng.random_range(0..=chars.len()), c),
        }
    }
    chars.into_iter().collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = synth::rng(77);
    let cfg = MatcherConfig::default();
    let mut queries = 0;
    let mut deviations = Vec::new();
    let mut matched = 0;
    for round in 0..10 {
        let n = rng.random_range(1..=5000);
        let entries: Vec<BibEntry> = (0..n)
            .map(|i| BibEntry::new(format!("r{round}-{:05}", (i * 7919) % 100_003), mixed_title(&mut rng)))
            .collect();
        let db = BibDatabase::from_entries("random", entries).map_err(|e| e.to_string())?;
        let qs: Vec<String> = (0..100)
            .map(|k| match k % 3 {
                0 => db.entries()[rng.random_range(0..n)].title.clone(),
                1 => {
                    let base = db.entries()[rng.random_range(0..n)].title.clone();
                    let edits = rng.random_range(1..8);
                    mutate(&mut rng, &base, edits)
                }
                _ => mixed_title(&mut rng),
            })
            .filter(|q| !q.trim().is_empty())
            .collect();
        let results: Vec<_> =
            qs.par_iter().map(|q| (q, find_best_match(q, &db, &cfg).unwrap(), oracle_best(q, db.entries()))).collect();
        for (q, got, (score, id)) in results {
            queries += 1;
            matched += usize::from(got.matched);
            let same = (got.score - score).abs() < 1e-12
                && got.matched == (score >= 0.9)
                && (!got.matched || got.matched_id == id);
            if !same {
                deviations.push(format!("{q:?}: got ({}, {:?}), oracle ({score}, {id:?})", got.score, got.matched_id));
            }
        }
    }
    ensure(queries >= 1000, || format!("only {queries} queries"))?;
    ensure(deviations.is_empty(), || format!("{} deviations, first: {}", deviations.len(), deviations[0]))?;
    Ok(format!("{queries} queries over 10 random DBs (1-5000 entries), {matched} matched, 0 deviations"))
}

fn threshold_semantics() -> Outcome {
    let db = fixture_db();
    let cfg = MatcherConfig::default();
    let mut rng = synth::rng(31);
    let long: Vec<&BibEntry> = db.entries().iter().filter(|e| e.normalized_title.chars().count() >= 30).collect();
    ensure(long.len() >= 500, || format!("only {} long titles", long.len()))?;
    let picked: Vec<&BibEntry> = sample(&mut rng, long.len(), 500).into_iter().map(|i| long[i]).collect();
    let cases: Vec<(&BibEntry, String, String)> = picked
        .iter()
        .map(|e| {
            let chars: Vec<char> = e.normalized_title.chars().collect();
            let letters: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_ascii_lowercase()).collect();
            let mut one = chars.clone();
            let i = letters[rng.random_range(0..letters.len())];
            one[i] = if chars[i] == 'x' { 'q' } else { 'x' };
            // Digits never occur in fixture titles, so each one costs an edit
            // against every entry.
            let k = chars.len() / 10 + 2;
            let mut many = chars.clone();
            for p in sample(&mut rng, chars.len(), k) {
                many[p] = (b'0' + (p % 10) as u8) as char;
            }
            (*e, one.into_iter().collect(), many.into_iter().collect())
        })
        .collect();
    let violations: Vec<String> = cases
        .par_iter()
        .filter_map(|(e, one, many)| {
            let len = e.normalized_title.chars().count();
            let near = dp_similarity(one, &e.normalized_title);
            let m1 = find_best_match(one, db, &cfg).unwrap();
            let m2 = find_best_match(many, db, &cfg).unwrap();
            let (far, _) = oracle_best(many, db.entries());
            if (near - (1.0 - 1.0 / len as f64)).abs() > 1e-12 || near < 0.9 || !m1.matched || m1.matched_id != e.id {
                return Some(format!("substitution in {:?} not matched ({near})", e.title));
            }
            if m2.matched || far >= 0.9 {
                return Some(format!("{many:?} matched (oracle {far})"));
            }
            None
        })
        .collect();
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok("500 titles: 1 substitution always matches, >10%+1 substitutions never match, 0 violations".into())
}

fn random_text(rng: &mut impl Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', ' ', 'é', 'ß', '中'];
    let n = rng.random_range(0..=64);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

fn metric_suite() -> Outcome {
    let (k, s) = ("kitten".chars().collect::<Vec<_>>(), "sitting".chars().collect::<Vec<_>>());
    let brute = brute_distance(&k, &s, &mut HashMap::new());
    ensure(brute == 3 && levenshtein("kitten", "sitting") == 3, || format!("kitten/sitting: brute {brute}"))?;
    let mut rng = synth::rng(4);
    for i in 0..10_000 {
        let (a, b, c) = (random_text(&mut rng), random_text(&mut rng), random_text(&mut rng));
        let ab = levenshtein(&a, &b);
        let sim = similarity(&a, &b);
        ensure(ab == dp_distance(&a, &b), || format!("pair {i}: {ab} vs DP {}", dp_distance(&a, &b)))?;
        ensure(ab == levenshtein(&b, &a) && sim == similarity(&b, &a), || format!("pair {i}: asymmetric"))?;
        ensure((ab == 0) == (a == b) && levenshtein(&a, &a) == 0, || format!("pair {i}: identity"))?;
        ensure(ab <= levenshtein(&a, &c) + levenshtein(&c, &b), || format!("pair {i}: triangle"))?;
        ensure((0.0..=1.0).contains(&sim) && (sim == 1.0) == (a == b), || format!("pair {i}: similarity {sim}"))?;
    }
    if a_few_brute_checks(&mut rng) {
        Ok("kitten/sitting = 3 (brute force); 10000 pairs: DP-equal, nonnegative, symmetric, identity, triangle".into())
    } else {
        Err("brute-force recursion disagrees with levenshtein on short strings".into())
    }
}

fn a_few_brute_checks(rng: &mut impl Rng) -> bool {
    (0..300).all(|_| {
        let a: Vec<char> = random_text(rng).chars().take(9).collect();
        let b: Vec<char> = random_text(rng).chars().take(9).collect();
        let (sa, sb): (String, String) = (a.iter().collect(), b.iter().collect());
        brute_distance(&a, &b, &mut HashMap::new()) == levenshtein(&sa, &sb)
    })
}

fn recognized(title: &str) -> Citation {
    let raw = format!("{title} .");
    let n = tokenize(&raw).len();
    let mut tags = vec![FieldTag::Title; n];
    tags[n - 1] = FieldTag::Other;
    assemble_fields(Citation::new(raw), &tags).expect("tags fit tokens")
}

fn performance() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let titles: Vec<String> = fixture_db().entries().iter().map(|e| e.title.clone()).collect();
    let db_dir = ingest_titles(dir.path(), "fixture", &titles);
    let mut body_pages = 6;
    let doc = loop {
        let d = paper(&titles[..50], &SynthOptions { body_pages, ..options(1) }, 5);
        if d.page_count >= 10 || body_pages > 12 {
            break d;
        }
        body_pages += 1;
    };
    ensure(doc.page_count == 10, || format!("fixture has {} pages", doc.page_count))?;
    let pdf = dir.path().join("ten-pages.pdf");
    std::fs::write(&pdf, &doc.bytes).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let out = run(&["-i", s(&pdf), "--db", s(&db_dir)]);
    let per_paper = t.elapsed();
    ensure(out.status.code() == Some(0), || format!("exit {:?}: {}", out.status.code(), stderr(&out)))?;
    ensure(per_paper <= Duration::from_secs(35), || format!("{per_paper:.1?} per 10-page paper"))?;

    // Matcher against a million entries: reported, not gated.
    let t = Instant::now();
    let big = synth::fixture_database("large", 1_000_000, 3);
    let build = t.elapsed();
    let mut rng = synth::rng(8);
    let mut cited: Vec<Citation> =
        sample(&mut rng, big.len(), 45).into_iter().map(|i| recognized(&big.entries()[i].title)).collect();
    cited.extend(synth::fabricated_titles(&mut rng, &big, 5, 0.9).iter().map(|t| recognized(t)));
    let t = Instant::now();
    let (flagged, _) = verify_partition(cited, &big, &MatcherConfig::default()).map_err(|e| e.to_string())?;
    let ms_per_citation = t.elapsed().as_secs_f64() * 1000.0 / 50.0;
    let soft = if ms_per_citation <= 50.0 { "within" } else { "over" };
    Ok(format!(
        "10-page paper end to end in {per_paper:.2?} (budget 35 s); 1M-entry matcher {ms_per_citation:.2} ms/citation, {soft} the 50 ms soft target (not gated; {} flagged, DB built in {build:.1?})",
        flagged.len()
    ))
}

fn cli_contract() -> Outcome {
    let f = fixture();
    let clean = run(&["-i", s(&f.clean), "--db", s(&f.db)]);
    ensure(stdout(&clean) == "All Clear!\n" && clean.status.code() == Some(0), || {
        format!("clean: {:?} exit {:?}", stdout(&clean), clean.status.code())
    })?;
    let fab = run(&["-i", s(&f.fabricated), "--db", s(&f.db)]);
    let snapshot = include_str!("snapshots/flagged_stdout.txt");
    ensure(fab.status.code() == Some(1), || format!("fabricated: exit {:?}", fab.status.code()))?;
    ensure(stdout(&fab) == snapshot, || format!("fabricated stdout differs from snapshot:\n{}", stdout(&fab)))?;
    for line in stdout(&fab).lines() {
        let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        ensure(v.get("author").is_some() && v.get("title").is_some(), || format!("record {line}"))?;
    }
    let missing = run(&["-i", s(&f.root.join("missing.pdf")), s(&f.clean), "--db", s(&f.db)]);
    ensure(missing.status.code() == Some(2), || format!("missing: exit {:?}", missing.status.code()))?;
    ensure(stdout(&missing).ends_with("All Clear!\n"), || "batch stopped at the missing file".into())?;
    Ok("clean -> \"All Clear!\" exit 0; fabricated -> snapshot records exit 1; missing file -> exit 2, batch continues"
        .into())
}

fn reproducibility() -> Outcome {
    let f = fixture();
    let lock = f.root.join("citecheck.lock");
    let out = run(&["lock", "--db", s(&f.db), "-o", s(&lock)]);
    ensure(out.status.success(), || stderr(&out))?;
    let mut reports = Vec::new();
    for run_dir in ["run1", "run2"] {
        let dir = f.root.join(run_dir);
        let o = run(&["-i", s(&f.fabricated), "--db", s(&f.db), "--lockfile", s(&lock), "-o", s(&dir)]);
        ensure(o.status.code() == Some(1), || format!("{run_dir}: exit {:?} {}", o.status.code(), stderr(&o)))?;
        let text = std::fs::read_to_string(dir.join("fabricated.report.json")).map_err(|e| e.to_string())?;
        let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        ensure(v["pin_check"]["passed"] == Value::Bool(true), || format!("{run_dir}: pin check did not pass"))?;
        reports.push(serde_json::to_string_pretty(&without_volatile_fields(&v)).unwrap());
    }
    ensure(reports[0] == reports[1], || "reports differ beyond timestamps and timings".into())?;

    // Re-ingest the same database name with one more row.
    let loaded = bibdb::load(&f.db).map_err(|e| e.to_string())?;
    let mut titles: Vec<String> = loaded.entries().iter().map(|e| e.title.clone()).collect();
    titles.push("An entry added after pinning".into());
    let stale_root = f.root.join("v2");
    std::fs::create_dir_all(&stale_root).unwrap();
    let newer = ingest_titles(&stale_root, "fixture", &titles);
    let new_version = bibdb::load(&newer).map_err(|e| e.to_string())?.version().to_string();
    let o = run(&["-i", s(&f.clean), "--db", s(&newer), "--lockfile", s(&lock)]);
    let err = stderr(&o);
    ensure(o.status.code() == Some(2), || format!("stale DB: exit {:?}", o.status.code()))?;
    ensure(err.contains("fixture") && err.contains(loaded.version()) && err.contains(&new_version), || {
        format!("stale DB message: {err}")
    })?;
    Ok("two pinned runs byte-identical modulo timestamp/timings; stale DB fails naming both versions".into())
}

fn partition() -> Outcome {
    let mut fixtures = 0;
    let mut crossing = 0;
    for (k, style) in RefStyle::ALL.into_iter().enumerate() {
        for columns in [1, 2] {
            for flags in 0..4u64 {
                let opts = SynthOptions {
                    style,
                    columns,
                    body_pages: 1 + (flags % 2) as usize,
                    toc_mention: flags & 1 == 1,
                    appendix: flags & 2 == 2,
                    running_header: flags & 1 == 0,
                    page_numbers: true,
                    hyphenate: flags >= 2,
                };
                let seed = (k as u64) * 100 + columns as u64 * 10 + flags;
                let doc = paper(&synth::fixture_titles(60, seed), &opts, seed);
                let lines = read_document_bytes(&doc.bytes, "fixture").map_err(|e| e.to_string())?.lines;
                let region = locate_reference_section(&lines).map_err(|e| e.to_string())?;
                let (_, groups) = extract::segment_lines(&region.lines);
                let mut owners = vec![0usize; region.lines.len()];
                for g in &groups {
                    for &i in g {
                        owners[i] += 1;
                    }
                }
                ensure(owners.iter().all(|&n| n == 1), || format!("{opts:?}: a line is not in exactly one entry"))?;
                let cs = segment_entries(&region);
                ensure(cs.len() == doc.entries.len(), || {
                    format!("{opts:?}: {} entries, expected {}", cs.len(), doc.entries.len())
                })?;
                for (c, g) in cs.iter().zip(&doc.entries).filter(|(_, g)| g.pages.len() > 1) {
                    let pages: BTreeSet<usize> = c.bboxes.iter().map(|b| b.page_index).collect();
                    ensure(c.bboxes.len() >= 2 && pages == g.pages, || {
                        format!("{opts:?}: cross-page entry has pages {pages:?}")
                    })?;
                    crossing += 1;
                }
                fixtures += 1;
            }
        }
    }
    ensure(crossing > 0, || "no cross-page entries in the fixtures".into())?;
    Ok(format!("{fixtures} golden fixtures partitioned exactly; {crossing} cross-page entries with boxes on each page"))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("seeded-corpus recall", seeded_corpus),
        ("matcher oracle equivalence", oracle_equivalence),
        ("threshold semantics", threshold_semantics),
        ("levenshtein metric suite", metric_suite),
        ("performance budget", performance),
        ("CLI contract", cli_contract),
        ("reproducibility and pinning", reproducibility),
        ("extraction partition", partition),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{:.1?}]", n + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why} [{:.1?}]", n + 1, t.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
