use std::collections::BTreeMap;
use std::path::Path;

use citecheck_core::bibdb::{self, BibDatabase, BibEntry, IngestOptions};
use citecheck_core::matcher::{verify_partition, MatcherConfig};
use citecheck_core::model::{citation_from_record, BoundingBox, Citation, FieldTag, Status};
use citecheck_core::recognize::{assemble_fields, parse, parse_batch, tokenize, RuleLabeler};
use citecheck_core::synth::{self, RefStyle};
use proptest::prelude::*;

fn rendered_refs() -> impl Strategy<Value = Vec<String>> {
    (any::<u64>(), 1usize..12).prop_map(|(seed, n)| {
        let mut rng = synth::rng(seed);
        synth::fixture_titles(n, seed)
            .iter()
            .enumerate()
            .map(|(i, t)| synth::random_reference(&mut rng, t).render(RefStyle::ALL[i % 3]))
            .collect()
    })
}

fn free_text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .,:;()\\[\\]\"'?-]{1,80}".prop_filter("non-blank", |s| !s.trim().is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn batch_equals_single(raws in rendered_refs(), extra in proptest::collection::vec(free_text(), 0..6)) {
        let cs: Vec<Citation> = raws.into_iter().chain(extra).map(Citation::new).collect();
        let batch = parse_batch(cs.clone(), &RuleLabeler).unwrap();
        let single: Vec<Citation> = cs.into_iter().map(|c| parse(c, &RuleLabeler).unwrap()).collect();
        prop_assert_eq!(&batch, &single);
        prop_assert_eq!(&batch, &parse_batch(single.iter().map(|c| Citation::new(c.raw_text.clone())).collect(), &RuleLabeler).unwrap());
        for c in &batch {
            prop_assert!(matches!(c.status(), Status::Recognized | Status::Unverifiable));
            prop_assert_eq!(c.title.is_empty(), c.status() == Status::Unverifiable);
            for s in &c.spans {
                prop_assert!(s.is_valid_for(&c.raw_text), "{:?} in {}", s, c.raw_text);
                prop_assert!(FieldTag::ALL.contains(&s.tag) && s.tag != FieldTag::Other);
            }
            let back = citation_from_record(&c.to_record()).unwrap();
            prop_assert_eq!(&back, c);
        }
    }

    #[test]
    fn title_stable_under_non_title_permutation(
        words in proptest::collection::vec("[a-z]{1,6}", 3..30),
        tags in proptest::collection::vec(0usize..19, 3..30),
        seed in any::<u64>(),
    ) {
        let raw = words.join(" ");
        let n = tokenize(&raw).len();
        let tags: Vec<FieldTag> = (0..n).map(|i| FieldTag::ALL[tags[i % tags.len()]]).collect();
        let base = assemble_fields(Citation::new(raw.clone()), &tags).unwrap();

        let slots: Vec<usize> = (0..n).filter(|&i| tags[i] != FieldTag::Title).collect();
        let mut moved: Vec<FieldTag> = slots.iter().map(|&i| tags[i]).collect();
        let mut rng = synth::rng(seed);
        use rand::seq::SliceRandom;
        moved.shuffle(&mut rng);
        let mut permuted = tags.clone();
        for (&i, t) in slots.iter().zip(moved) {
            permuted[i] = t;
        }
        let other = assemble_fields(Citation::new(raw), &permuted).unwrap();
        prop_assert_eq!(&base.title, &other.title);
        prop_assert_eq!(base.status(), other.status());
    }

    #[test]
    fn record_round_trip(
        raw in free_text(),
        boxes in proptest::collection::vec((0usize..5, 0u16..500, 0u16..700, 1u16..100, 1u16..40), 0..4),
    ) {
        let raw = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        let bboxes = boxes
            .into_iter()
            .map(|(p, x, y, w, h)| BoundingBox::new(p, x as f64 / 4.0, y as f64 / 4.0, (x + w) as f64 / 4.0, (y + h) as f64 / 4.0))
            .collect();
        let c = parse(Citation::new(raw).with_bboxes(bboxes), &RuleLabeler).unwrap();
        let json = serde_json::to_string(&c.to_record()).unwrap();
        let record: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(citation_from_record(&record).unwrap(), c);
    }
}

/// Runs the recognizer and matcher and records each status seen.
fn trail(raw: &str, db: &BibDatabase) -> Vec<Status> {
    let c = Citation::new(raw);
    let mut seen = vec![c.status()];
    let c = parse(c, &RuleLabeler).unwrap();
    seen.push(c.status());
    if c.status() == Status::Recognized {
        let (mut f, mut v) = verify_partition(vec![c], db, &MatcherConfig::default()).unwrap();
        seen.push(f.pop().or_else(|| v.pop()).unwrap().status());
    }
    seen
}

fn rank(s: Status) -> u8 {
    match s {
        Status::Extracted => 0,
        Status::Recognized | Status::Unverifiable => 1,
        Status::Verified => 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn status_never_moves_backward(raws in rendered_refs(), junk in proptest::collection::vec(free_text(), 0..4)) {
        let titles: Vec<String> = raws.iter().map(|r| parse(Citation::new(r.clone()), &RuleLabeler).unwrap().title).filter(|t| !t.is_empty()).step_by(2).collect();
        let db = BibDatabase::from_entries("d", titles.iter().enumerate().map(|(i, t)| BibEntry::new(i.to_string(), t.clone())).collect()).unwrap();
        for raw in raws.iter().chain(&junk) {
            let t = trail(raw, &db);
            prop_assert!(t.windows(2).all(|w| rank(w[0]) <= rank(w[1]) && w[0].can_become(w[1])), "{:?}", t);
        }
    }
}

fn write_csv(path: &Path, rows: &[(String, String)]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["id", "title"]).unwrap();
    for (id, title) in rows {
        w.write_record([id, title]).unwrap();
    }
    w.flush().unwrap();
}

fn multiset(entries: &[BibEntry]) -> BTreeMap<(String, String), usize> {
    let mut m = BTreeMap::new();
    for e in entries {
        *m.entry((e.id.clone(), e.title.clone())).or_default() += 1;
    }
    m
}

fn entry_title() -> impl Strategy<Value = String> {
    "[A-Za-zé0-9][A-Za-zé0-9 ,:'\"?-]{0,40}[A-Za-z0-9]"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ingest_load_round_trip_and_order_independence(
        titles in proptest::collection::vec(entry_title(), 1..60),
        seed in any::<u64>(),
    ) {
        let rows: Vec<(String, String)> = titles.iter().enumerate().map(|(i, t)| (format!("r{i}"), t.clone())).collect();
        let mut shuffled = rows.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut synth::rng(seed));

        let dir = tempfile::tempdir().unwrap();
        let opts = IngestOptions { created_at: Some("2026-01-01T00:00:00Z".into()), ..IngestOptions::default() };
        write_csv(&dir.path().join("a.csv"), &rows);
        write_csv(&dir.path().join("b.csv"), &shuffled);
        let ra = bibdb::ingest(&dir.path().join("a.csv"), "t", &dir.path().join("da"), &opts).unwrap();
        let rb = bibdb::ingest(&dir.path().join("b.csv"), "t", &dir.path().join("db"), &opts).unwrap();
        prop_assert_eq!(&ra.manifest.version, &rb.manifest.version);
        prop_assert_eq!(ra.manifest.entry_count, rows.len());

        let loaded = bibdb::load(&dir.path().join("da")).unwrap();
        let expect: Vec<BibEntry> = rows.iter().map(|(i, t)| BibEntry::new(i.clone(), t.clone())).collect();
        prop_assert_eq!(multiset(loaded.entries()), multiset(&expect));
        prop_assert_eq!(loaded.version(), ra.manifest.version.as_str());

        let direct = BibDatabase::from_entries("t", shuffled.iter().map(|(i, t)| BibEntry::new(i.clone(), t.clone())).collect()).unwrap();
        prop_assert_eq!(direct.version(), loaded.version());
    }
}

#[test]
fn stale_database_fails_pin_check_with_both_versions() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("dump.tsv");
    std::fs::write(&src, "id\ttitle\n1\tGraph networks\n2\tSparse attention\n").unwrap();
    let opts = IngestOptions::default();
    let old = bibdb::ingest(&src, "acl", &dir.path().join("v1"), &opts).unwrap().manifest;
    let lock = dir.path().join("citecheck.lock");
    std::fs::write(&lock, bibdb::lockfile_text([&old])).unwrap();
    assert!(bibdb::pin_check(std::slice::from_ref(&old), &lock).unwrap().passed);

    std::fs::write(&src, "id\ttitle\n1\tGraph networks\n2\tSparse attention\n3\tA third title\n").unwrap();
    let new = bibdb::ingest(&src, "acl", &dir.path().join("v2"), &opts).unwrap().manifest;
    let report = bibdb::pin_check(std::slice::from_ref(&new), &lock).unwrap();
    assert!(!report.passed);
    let msg = report.describe_failures().join("\n");
    assert!(msg.contains("acl") && msg.contains(&old.version) && msg.contains(&new.version), "{msg}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn rules_total_on_arbitrary_text(raw in "\\PC{1,120}") {
        let raw = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        prop_assume!(!raw.is_empty());
        let c = parse(Citation::new(raw), &RuleLabeler).unwrap();
        prop_assert!(c.spans.iter().all(|s| s.is_valid_for(&c.raw_text)));
    }
}
