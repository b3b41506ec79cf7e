mod common;

use std::path::Path;

use citecheck_core::highlight::read_highlights;
use citecheck_core::report::validate_report;
use citecheck_core::synth;
use common::*;
use serde_json::Value;

#[test]
fn clean_document_prints_all_clear() {
    let f = fixture();
    let o = run(&["-i", s(&f.clean), "--db", s(&f.db)]);
    assert_eq!(stdout(&o), "All Clear!\n", "{}", stderr(&o));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn fabricated_references_are_printed_as_records() {
    let f = fixture();
    let o = run(&["-i", s(&f.fabricated), "--db", s(&f.db)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let out = stdout(&o);
    let records: Vec<Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let titles: Vec<&str> = records.iter().map(|r| r["title"].as_str().unwrap()).collect();
    assert_eq!(titles, f.fake_titles.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &records {
        let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["author", "title"]);
        assert!(!r["author"].as_str().unwrap().is_empty());
    }

    let snap = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots/flagged_stdout.txt");
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::write(&snap, &out).unwrap();
    }
    assert_eq!(out, std::fs::read_to_string(&snap).expect("snapshot present"));
}

#[test]
fn missing_file_fails_without_stopping_the_batch() {
    let f = fixture();
    let missing = f.root.join("nope.pdf");
    let o = run(&["-i", s(&missing), s(&f.clean), "--db", s(&f.db)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o), format!("==> {} <==\nAll Clear!\n", f.clean.display()));
    assert!(stderr(&o).contains("nope.pdf"), "{}", stderr(&o));
}

#[test]
fn exit_code_is_worst_over_batch() {
    let f = fixture();
    let o = run(&["-i", s(&f.clean), s(&f.fabricated), "--db", s(&f.db), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with(&format!(
        "==> {} <==\nAll Clear!\n==> {} <==\n",
        f.clean.display(),
        f.fabricated.display()
    )));
    let one = run(&["-i", s(&f.clean), s(&f.fabricated), "--db", s(&f.db), "--workers", "1"]);
    assert_eq!(stdout(&one), out);
}

#[test]
fn output_directory_gets_reports_and_highlights() {
    let f = fixture();
    let out = f.root.join("out");
    let original = std::fs::read(&f.fabricated).unwrap();
    let o = run(&["-i", s(&f.clean), s(&f.fabricated), "--db", s(&f.db), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    for stem in ["clean", "fabricated"] {
        let v: Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("{stem}.report.json"))).unwrap()).unwrap();
        validate_report(&v).unwrap();
    }
    assert!(!out.join("clean.flagged.pdf").exists());
    let marked = std::fs::read(out.join("fabricated.flagged.pdf")).unwrap();
    assert_eq!(read_highlights(&marked).unwrap().len(), f.fake_boxes);
    assert_eq!(std::fs::read(&f.fabricated).unwrap(), original);

    let none = f.root.join("none");
    run(&["-i", s(&f.fabricated), "--db", s(&f.db), "-o", s(&none), "--no-highlight"]);
    assert!(none.join("fabricated.report.json").exists());
    assert!(!none.join("fabricated.flagged.pdf").exists());
}

#[test]
fn json_only_prints_reports() {
    let f = fixture();
    let o = run(&["-i", s(&f.fabricated), "--db", s(&f.db), "--json-only"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate_report(&v).unwrap();
    assert_eq!(v["counts"]["flagged"], 2);

    let o = run(&["-i", s(&f.clean), s(&f.fabricated), "--db", s(&f.db), "--json-only"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn percentage_threshold_and_bad_arguments() {
    let f = fixture();
    let o = run(&["-i", s(&f.clean), "--db", s(&f.db), "--threshold", "90"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(run(&["-i", s(&f.clean), "--db", s(&f.db), "--threshold", "0"]).status.code(), Some(2));
    assert_eq!(run(&["-i", s(&f.clean)]).status.code(), Some(2));
    assert_eq!(run(&["--db", s(&f.db)]).status.code(), Some(2));
    assert_eq!(run(&["-i", s(&f.clean), "--db", s(&f.db), "--labeler", "crf"]).status.code(), Some(2));
    assert_eq!(run(&["-i", s(&f.clean), "--db", s(&f.root.join("missing-db"))]).status.code(), Some(2));
}

#[test]
fn unreadable_pdfs_are_operational_errors() {
    let f = fixture();
    let locked = f.root.join("locked.pdf");
    std::fs::write(&locked, synth::encrypt_pdf(&std::fs::read(&f.clean).unwrap(), "pw")).unwrap();
    let scan = f.root.join("scan.pdf");
    std::fs::write(&scan, synth::image_only_pdf()).unwrap();
    let o = run(&["-i", s(&locked), s(&scan), "--db", s(&f.db)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
    let err = stderr(&o);
    assert!(err.contains("encrypted") && err.contains("scan.pdf"), "{err}");
}

#[test]
fn ingest_and_lock_subcommands() {
    let f = fixture();
    let src = f.root.join("dump.csv");
    std::fs::write(&src, "title,id\nGraph networks,g1\n,g2\nSparse attention,s1\n").unwrap();
    let out = f.root.join("mini");
    let o = run(&["ingest", s(&src), "--name", "mini", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("2 entries") && stdout(&o).contains("1 empty titles skipped"));

    let lock = f.root.join("citecheck.lock");
    assert_eq!(run(&["lock", "--db", s(&out), "--db", s(&f.db), "-o", s(&lock)]).status.code(), Some(0));
    let text = std::fs::read_to_string(&lock).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("mini\t"));

    let o = run(&["-i", s(&f.clean), "--db", s(&out), "--db", s(&f.db), "--lockfile", s(&lock)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let bad = f.root.join("bad.tsv");
    std::fs::write(&bad, "name\tid\nx\t1\n").unwrap();
    let o = run(&["ingest", s(&bad), "--name", "bad", "-o", s(&f.root.join("bad"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("title"));
}

#[test]
fn profile_prints_timing_table() {
    let f = fixture();
    let o = run(&["-i", s(&f.clean), "--db", s(&f.db), "--profile"]);
    let err = stderr(&o);
    for stage in ["extractor", "recognizer", "matcher", "total"] {
        assert!(err.lines().any(|l| l.starts_with(stage)), "{err}");
    }
    assert_eq!(stdout(&o), "All Clear!\n");
}
