//! Verification reports, stage timings and environment profile.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bibdb::{DbManifest, PinReport};
use crate::model::{Citation, Stage, StageTiming};

/// Version of the JSON report layout.
pub const REPORT_FORMAT: u32 = 1;

/// Runs `work` and records its wall-clock duration for `stage`.
pub fn stopwatch<R>(stage: Stage, work: impl FnOnce() -> R) -> (R, StageTiming) {
    let start = Instant::now();
    let out = work();
    let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
    (out, StageTiming { stage, elapsed_ms, unit_count: 0 })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelerIdentity {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub extracted: usize,
    pub recognized: usize,
    pub unverifiable: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentInfo {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub tool_version: String,
    /// Resident-set high-water mark; only collected when profiling.
    pub peak_memory_kb: Option<u64>,
}

impl EnvironmentInfo {
    pub fn capture(profile: bool) -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpus: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            peak_memory_kb: if profile { peak_memory_kb() } else { None },
        }
    }
}

/// Peak resident set size from `/proc/self/status`, where available.
pub fn peak_memory_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub format: u32,
    pub input_path: String,
    pub generated_at: String,
    pub db_manifests: Vec<DbManifest>,
    pub labeler: LabelerIdentity,
    pub threshold: f64,
    pub counts: Counts,
    pub flagged: Vec<Map<String, Value>>,
    pub unverifiable: Vec<Map<String, Value>>,
    pub timings: Vec<StageTiming>,
    pub environment: EnvironmentInfo,
    pub pin_check: Option<PinReport>,
}

impl VerificationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        input_path: impl Into<String>,
        db_manifests: Vec<DbManifest>,
        labeler: LabelerIdentity,
        threshold: f64,
        extracted: usize,
        flagged: &[Citation],
        unverifiable: &[Citation],
        timings: Vec<StageTiming>,
        environment: EnvironmentInfo,
        pin_check: Option<PinReport>,
    ) -> Self {
        Self {
            format: REPORT_FORMAT,
            input_path: input_path.into(),
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            db_manifests,
            labeler,
            threshold,
            counts: Counts {
                extracted,
                recognized: extracted - unverifiable.len(),
                unverifiable: unverifiable.len(),
                flagged: flagged.len(),
            },
            flagged: flagged.iter().map(Citation::to_record).collect(),
            unverifiable: unverifiable.iter().map(Citation::to_record).collect(),
            timings,
            environment,
            pin_check,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn is_all_clear(&self) -> bool {
        self.counts.flagged == 0 && self.counts.unverifiable == 0
    }
}

/// Copy of a report value with run-dependent fields (timestamp, timings,
/// memory) blanked, for reproducibility comparisons.
pub fn without_volatile_fields(report: &Value) -> Value {
    let mut v = report.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.insert("generated_at".into(), Value::Null);
        if let Some(Value::Array(ts)) = obj.get_mut("timings") {
            for t in ts.iter_mut().filter_map(Value::as_object_mut) {
                t.insert("elapsed_ms".into(), Value::Null);
            }
        }
        if let Some(env) = obj.get_mut("environment").and_then(Value::as_object_mut) {
            env.insert("peak_memory_kb".into(), Value::Null);
        }
    }
    v
}

/// One row of the per-stage timing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub stage: Stage,
    pub papers: usize,
    pub citations: usize,
    pub total_ms: f64,
    pub ms_per_paper: f64,
    /// Absent when no citations were processed.
    pub ms_per_citation: Option<f64>,
}

/// Aggregates per-paper stage timings into mean ms/paper and ms/citation.
pub fn summarize_timings(per_paper: &[Vec<StageTiming>]) -> Vec<TimingRow> {
    let mut acc: BTreeMap<Stage, (usize, usize, f64)> = BTreeMap::new();
    for timings in per_paper {
        for t in timings {
            let e = acc.entry(t.stage).or_default();
            e.0 += 1;
            e.1 += t.unit_count;
            e.2 += t.elapsed_ms;
        }
    }
    acc.into_iter()
        .map(|(stage, (papers, citations, total_ms))| TimingRow {
            stage,
            papers,
            citations,
            total_ms,
            ms_per_paper: total_ms / papers as f64,
            ms_per_citation: (citations > 0).then(|| total_ms / citations as f64),
        })
        .collect()
}

/// Renders timing rows as an aligned text table.
pub fn timing_table(rows: &[TimingRow]) -> String {
    let mut out =
        format!("{:<11} {:>7} {:>10} {:>14} {:>17}\n", "stage", "papers", "citations", "ms/paper", "ms/citation");
    for r in rows {
        let per_cit = r.ms_per_citation.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        out.push_str(&format!(
            "{:<11} {:>7} {:>10} {:>14.3} {:>17}\n",
            r.stage.as_str(),
            r.papers,
            r.citations,
            r.ms_per_paper,
            per_cit
        ));
    }
    out
}

fn require<'a>(obj: &'a Map<String, Value>, key: &str, errors: &mut Vec<String>) -> Option<&'a Value> {
    let v = obj.get(key);
    if v.is_none() {
        errors.push(format!("missing `{key}`"));
    }
    v
}

fn count(obj: &Map<String, Value>, key: &str, errors: &mut Vec<String>) -> Option<u64> {
    let v = require(obj, key, errors)?.as_u64();
    if v.is_none() {
        errors.push(format!("`{key}` must be a non-negative integer"));
    }
    v
}

const REPORT_KEYS: [&str; 12] = [
    "format",
    "input_path",
    "generated_at",
    "db_manifests",
    "labeler",
    "threshold",
    "counts",
    "flagged",
    "unverifiable",
    "timings",
    "environment",
    "pin_check",
];

/// Structural check of a JSON report against the published layout
/// (`docs/report.schema.json`) plus the count invariants.
pub fn validate_report(v: &Value) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    let Some(obj) = v.as_object() else {
        return Err(vec!["report must be an object".into()]);
    };
    for k in obj.keys().filter(|k| !REPORT_KEYS.contains(&k.as_str())) {
        errors.push(format!("unknown key `{k}`"));
    }
    if count(obj, "format", &mut errors).is_some_and(|f| f != REPORT_FORMAT as u64) {
        errors.push("unsupported format".into());
    }
    for key in ["input_path", "generated_at"] {
        if require(obj, key, &mut errors).is_some_and(|s| !s.is_string()) {
            errors.push(format!("`{key}` must be a string"));
        }
    }
    if let Some(t) = require(obj, "threshold", &mut errors) {
        if !t.as_f64().is_some_and(|t| t > 0.0 && t <= 1.0) {
            errors.push("`threshold` must be in (0, 1]".into());
        }
    }
    if let Some(l) = require(obj, "labeler", &mut errors) {
        if !(l["name"].is_string() && l["version"].is_string()) {
            errors.push("`labeler` needs string `name` and `version`".into());
        }
    }
    if let Some(ms) = require(obj, "db_manifests", &mut errors) {
        match ms.as_array() {
            Some(ms) => {
                for m in ms {
                    if serde_json::from_value::<DbManifest>(m.clone()).is_err() {
                        errors.push("malformed entry in `db_manifests`".into());
                    }
                }
            }
            None => errors.push("`db_manifests` must be an array".into()),
        }
    }
    let list_len = |key: &str, errors: &mut Vec<String>| -> Option<u64> {
        let arr = require(obj, key, errors)?.as_array();
        let Some(arr) = arr else {
            errors.push(format!("`{key}` must be an array"));
            return None;
        };
        for rec in arr {
            match rec.as_object().map(crate::model::citation_from_record) {
                Some(Ok(_)) => {}
                Some(Err(e)) => errors.push(format!("`{key}` record: {e}")),
                None => errors.push(format!("`{key}` record must be an object")),
            }
        }
        Some(arr.len() as u64)
    };
    let n_flagged = list_len("flagged", &mut errors);
    let n_unverifiable = list_len("unverifiable", &mut errors);
    if let Some(c) = require(obj, "counts", &mut errors) {
        match c.as_object() {
            Some(c) => {
                let e = count(c, "extracted", &mut errors);
                let r = count(c, "recognized", &mut errors);
                let u = count(c, "unverifiable", &mut errors);
                let f = count(c, "flagged", &mut errors);
                if let (Some(e), Some(r), Some(u)) = (e, r, u) {
                    if e != r + u {
                        errors.push("counts: extracted != recognized + unverifiable".into());
                    }
                }
                if let (Some(f), Some(r)) = (f, r) {
                    if f > r {
                        errors.push("counts: flagged > recognized".into());
                    }
                }
                if f.is_some() && f != n_flagged {
                    errors.push("counts.flagged disagrees with `flagged`".into());
                }
                if u.is_some() && u != n_unverifiable {
                    errors.push("counts.unverifiable disagrees with `unverifiable`".into());
                }
            }
            None => errors.push("`counts` must be an object".into()),
        }
    }
    if let Some(ts) = require(obj, "timings", &mut errors) {
        let ok =
            ts.as_array().is_some_and(|ts| ts.iter().all(|t| serde_json::from_value::<StageTiming>(t.clone()).is_ok()));
        if !ok {
            errors.push("`timings` must be an array of stage timings".into());
        }
    }
    if let Some(env) = require(obj, "environment", &mut errors) {
        if serde_json::from_value::<EnvironmentInfo>(env.clone()).is_err() {
            errors.push("malformed `environment`".into());
        }
    }
    if let Some(p) = require(obj, "pin_check", &mut errors) {
        if !p.is_null() && serde_json::from_value::<PinReport>(p.clone()).is_err() {
            errors.push("malformed `pin_check`".into());
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
