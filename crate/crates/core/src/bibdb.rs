//! Versioned title databases: ingestion from CSV/TSV dumps, a canonical
//! on-disk form with a content-hash manifest, loading, and version pinning.
//!
//! A persisted database is a directory holding `entries.tsv` (id, title,
//! normalized title; sorted by id; backslash-escaped) and `manifest.txt`
//! (`key: value` lines). The version is the SHA-256 of the sorted
//! `(id, normalized_title)` stream, so it depends on content only.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::matcher::index::TitleIndex;
use crate::matcher::{normalize_title, NORMALIZATION_VERSION};

pub const ENTRIES_FILE: &str = "entries.tsv";
pub const MANIFEST_FILE: &str = "manifest.txt";
const ENTRIES_HEADER: &str = "id\ttitle\tnormalized_title";

#[derive(Debug, Error)]
pub enum DbError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: header has no `title` column", path.display())]
    MissingTitleColumn { path: PathBuf },
    #[error("{}: {reason}", path.display())]
    Source { path: PathBuf, reason: String },
    #[error("corrupt database at {}: {reason}", path.display())]
    CorruptDatabase { path: PathBuf, reason: String },
    #[error("manifest of {} does not match its entries: {field} is `{manifest}` in the manifest but `{actual}` in the data", path.display())]
    ManifestMismatch { path: PathBuf, field: &'static str, manifest: String, actual: String },
    #[error("database at {} was normalized with rule version {found}; this build uses {expected}, re-ingest it", path.display())]
    NormalizationMismatch { path: PathBuf, found: u32, expected: u32 },
    #[error("duplicate entry id `{0}`")]
    DuplicateId(String),
    #[error("invalid database name `{0}`")]
    InvalidName(String),
    #[error("lockfile {} not found", .0.display())]
    LockfileMissing(PathBuf),
    #[error("{}:{line}: {reason}", path.display())]
    InvalidLockfile { path: PathBuf, line: usize, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DbError + '_ {
    move |source| DbError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibEntry {
    pub id: String,
    pub title: String,
    pub normalized_title: String,
}

impl BibEntry {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        let title = title.into();
        let normalized_title = normalize_title(&title);
        Self { id: id.into(), title, normalized_title }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbManifest {
    pub db_name: String,
    pub version: String,
    pub entry_count: usize,
    pub created_at: String,
    pub normalization_version: u32,
    pub source_files: Vec<SourceFile>,
}

impl DbManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "db_name: {}", self.db_name);
        let _ = writeln!(out, "version: {}", self.version);
        let _ = writeln!(out, "entry_count: {}", self.entry_count);
        let _ = writeln!(out, "created_at: {}", self.created_at);
        let _ = writeln!(out, "normalization_version: {}", self.normalization_version);
        for f in &self.source_files {
            let _ = writeln!(out, "source_file: {} {}", f.sha256, f.path);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        let mut source_files = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(": ").ok_or_else(|| format!("line {}: expected `key: value`", n + 1))?;
            match key {
                "source_file" => {
                    let (sha256, path) =
                        value.split_once(' ').ok_or_else(|| format!("line {}: expected `<sha256> <path>`", n + 1))?;
                    source_files.push(SourceFile { path: path.to_string(), sha256: sha256.to_string() });
                }
                "db_name" | "version" | "entry_count" | "created_at" | "normalization_version" => {
                    if fields.insert(key, value).is_some() {
                        return Err(format!("line {}: duplicate key `{key}`", n + 1));
                    }
                }
                other => return Err(format!("line {}: unknown key `{other}`", n + 1)),
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| format!("missing key `{k}`"));
        Ok(DbManifest {
            db_name: get("db_name")?.to_string(),
            version: get("version")?.to_string(),
            entry_count: get("entry_count")?.parse().map_err(|_| "entry_count is not an integer".to_string())?,
            created_at: get("created_at")?.to_string(),
            normalization_version: get("normalization_version")?
                .parse()
                .map_err(|_| "normalization_version is not an integer".to_string())?,
            source_files,
        })
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape sequence `\\{}`", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

/// Content version: SHA-256 over `(id, normalized_title)` pairs sorted by id.
pub fn content_version<'a>(entries: impl IntoIterator<Item = &'a BibEntry>) -> String {
    let mut pairs: Vec<(&str, &str)> =
        entries.into_iter().map(|e| (e.id.as_str(), e.normalized_title.as_str())).collect();
    pairs.sort_unstable();
    let mut hasher = Sha256::new();
    for (id, norm) in pairs {
        hasher.update(escape(id).as_bytes());
        hasher.update(b"\t");
        hasher.update(escape(norm).as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// An immutable, indexed title database.
#[derive(Debug)]
pub struct BibDatabase {
    manifest: DbManifest,
    entries: Vec<BibEntry>,
    index: TitleIndex,
}

impl BibDatabase {
    /// Builds an in-memory database. Entries are sorted by id; ids must be unique.
    pub fn from_entries(name: &str, mut entries: Vec<BibEntry>) -> Result<Self, DbError> {
        entries.sort_unstable_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(DbError::DuplicateId(w[0].id.clone()));
        }
        let manifest = DbManifest {
            db_name: name.to_string(),
            version: content_version(&entries),
            entry_count: entries.len(),
            created_at: String::new(),
            normalization_version: NORMALIZATION_VERSION,
            source_files: Vec::new(),
        };
        Ok(Self::assemble(manifest, entries))
    }

    fn assemble(manifest: DbManifest, entries: Vec<BibEntry>) -> Self {
        let index = TitleIndex::build(entries.iter().map(|e| e.normalized_title.as_str()));
        Self { manifest, entries, index }
    }

    pub fn name(&self) -> &str {
        &self.manifest.db_name
    }

    pub fn version(&self) -> &str {
        &self.manifest.version
    }

    pub fn manifest(&self) -> &DbManifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BibEntry] {
        &self.entries
    }

    pub(crate) fn entry(&self, id: u32) -> &BibEntry {
        &self.entries[id as usize]
    }

    pub(crate) fn index(&self) -> &TitleIndex {
        &self.index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Tab,
}

impl Delimiter {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("tsv" | "tab") => Delimiter::Tab,
            _ => Delimiter::Comma,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Overrides detection from the file extension.
    pub delimiter: Option<Delimiter>,
    /// Fixed creation timestamp; the current UTC time when absent.
    pub created_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub path: PathBuf,
    pub manifest: DbManifest,
    pub skipped_empty_title: usize,
    pub malformed: Vec<MalformedRow>,
}

fn valid_db_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Reads a CSV/TSV dump with a `title` column (and optional `id`) and writes
/// a persisted database into `out_dir`.
pub fn ingest(source: &Path, db_name: &str, out_dir: &Path, options: &IngestOptions) -> Result<IngestReport, DbError> {
    if !valid_db_name(db_name) {
        return Err(DbError::InvalidName(db_name.to_string()));
    }
    let bytes = fs::read(source).map_err(io_err(source))?;
    let delimiter = options.delimiter.unwrap_or_else(|| Delimiter::from_path(source));
    let mut builder = csv::ReaderBuilder::new();
    builder.flexible(true).has_headers(true);
    match delimiter {
        Delimiter::Tab => builder.delimiter(b'\t').quoting(false),
        Delimiter::Comma => builder.delimiter(b','),
    };
    let mut reader = builder.from_reader(bytes.as_slice());

    let headers =
        reader.headers().map_err(|e| DbError::Source { path: source.to_path_buf(), reason: e.to_string() })?.clone();
    let column =
        |name: &str| headers.iter().position(|h| h.trim_start_matches('\u{feff}').trim().eq_ignore_ascii_case(name));
    let title_col = column("title").ok_or_else(|| DbError::MissingTitleColumn { path: source.to_path_buf() })?;
    let id_col = column("id");

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let mut malformed = Vec::new();
    let mut skipped_empty_title = 0;
    let mut row_ordinal = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line() + 1;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(DbError::Source { path: source.to_path_buf(), reason: e.to_string() });
                }
                row_ordinal += 1;
                let line = e.position().map_or(line, |p| p.line());
                malformed.push(MalformedRow { line, reason: e.to_string() });
                continue;
            }
        }
        row_ordinal += 1;
        let line = record.position().map_or(line, |p| p.line());
        if record.len() != headers.len() {
            malformed.push(MalformedRow {
                line,
                reason: format!("expected {} columns, found {}", headers.len(), record.len()),
            });
            continue;
        }
        let title = record[title_col].trim();
        let entry = BibEntry::new(
            id_col
                .map(|c| record[c].trim())
                .filter(|id| !id.is_empty())
                .map_or_else(|| format!("{db_name}-{row_ordinal}"), str::to_string),
            title,
        );
        if entry.normalized_title.is_empty() {
            skipped_empty_title += 1;
            continue;
        }
        if !seen.insert(entry.id.clone()) {
            malformed.push(MalformedRow { line, reason: format!("duplicate id `{}`", entry.id) });
            continue;
        }
        entries.push(entry);
    }

    let created_at = options
        .created_at
        .clone()
        .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let db = BibDatabase::from_entries(db_name, entries)?;
    let mut manifest = db.manifest.clone();
    manifest.created_at = created_at;
    manifest.source_files =
        vec![SourceFile { path: source.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) }];
    persist(&db.entries, &manifest, out_dir)?;
    Ok(IngestReport { path: out_dir.to_path_buf(), manifest, skipped_empty_title, malformed })
}

fn persist(entries: &[BibEntry], manifest: &DbManifest, out_dir: &Path) -> Result<(), DbError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut text = String::with_capacity(entries.len() * 96);
    text.push_str(ENTRIES_HEADER);
    text.push('\n');
    for e in entries {
        let _ = writeln!(text, "{}\t{}\t{}", escape(&e.id), escape(&e.title), escape(&e.normalized_title));
    }
    let entries_path = out_dir.join(ENTRIES_FILE);
    fs::write(&entries_path, text).map_err(io_err(&entries_path))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest.to_text()).map_err(io_err(&manifest_path))
}

/// Loads a persisted database, re-verifying every entry and the manifest.
pub fn load(path: &Path) -> Result<BibDatabase, DbError> {
    let corrupt = |reason: String| DbError::CorruptDatabase { path: path.to_path_buf(), reason };
    let manifest_path = path.join(MANIFEST_FILE);
    let manifest_text = fs::read_to_string(&manifest_path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => corrupt(format!("missing {MANIFEST_FILE}")),
        _ => DbError::Io { path: manifest_path.clone(), source: e },
    })?;
    let manifest = DbManifest::parse(&manifest_text).map_err(|e| corrupt(format!("{MANIFEST_FILE}: {e}")))?;
    if manifest.normalization_version != NORMALIZATION_VERSION {
        return Err(DbError::NormalizationMismatch {
            path: path.to_path_buf(),
            found: manifest.normalization_version,
            expected: NORMALIZATION_VERSION,
        });
    }

    let entries_path = path.join(ENTRIES_FILE);
    let file = fs::File::open(&entries_path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => corrupt(format!("missing {ENTRIES_FILE}")),
        _ => DbError::Io { path: entries_path.clone(), source: e },
    })?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == ENTRIES_HEADER => {}
        Some(Err(e)) => return Err(DbError::Io { path: entries_path, source: e }),
        _ => return Err(corrupt(format!("{ENTRIES_FILE}: bad header"))),
    }
    let mut entries = Vec::with_capacity(manifest.entry_count);
    for (n, line) in lines.enumerate() {
        let line = line.map_err(io_err(&entries_path))?;
        let lineno = n + 2;
        let mut parts = line.split('\t');
        let (Some(id), Some(title), Some(norm), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(corrupt(format!("{ENTRIES_FILE}:{lineno}: expected 3 columns")));
        };
        let field = |s: &str| unescape(s).map_err(|e| corrupt(format!("{ENTRIES_FILE}:{lineno}: {e}")));
        let entry = BibEntry::new(field(id)?, field(title)?);
        if entry.normalized_title != field(norm)? {
            return Err(corrupt(format!(
                "{ENTRIES_FILE}:{lineno}: stored normalized title differs from the current normalization"
            )));
        }
        entries.push(entry);
    }

    let actual_version = content_version(&entries);
    if actual_version != manifest.version {
        return Err(DbError::ManifestMismatch {
            path: path.to_path_buf(),
            field: "version",
            manifest: manifest.version,
            actual: actual_version,
        });
    }
    if entries.len() != manifest.entry_count {
        return Err(DbError::ManifestMismatch {
            path: path.to_path_buf(),
            field: "entry_count",
            manifest: manifest.entry_count.to_string(),
            actual: entries.len().to_string(),
        });
    }
    entries.sort_unstable_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(corrupt(format!("duplicate id `{}`", w[0].id)));
    }
    Ok(BibDatabase::assemble(manifest, entries))
}

/// Lockfile text pinning each database to its current version.
pub fn lockfile_text<'a>(manifests: impl IntoIterator<Item = &'a DbManifest>) -> String {
    manifests.into_iter().map(|m| format!("{}\t{}\n", m.db_name, m.version)).collect()
}

pub fn read_lockfile(path: &Path) -> Result<Vec<(String, String)>, DbError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => DbError::LockfileMissing(path.to_path_buf()),
        _ => DbError::Io { path: path.to_path_buf(), source: e },
    })?;
    let mut pins = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(name), Some(version), None) if !name.is_empty() && !version.is_empty() => {
                pins.push((name.to_string(), version.to_string()));
            }
            _ => {
                return Err(DbError::InvalidLockfile {
                    path: path.to_path_buf(),
                    line: n + 1,
                    reason: "expected `db_name<TAB>version`".into(),
                })
            }
        }
    }
    Ok(pins)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinMismatch {
    pub db_name: String,
    pub locked: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinReport {
    pub lockfile: String,
    pub passed: bool,
    pub mismatches: Vec<PinMismatch>,
    /// Loaded databases the lockfile does not mention.
    pub unpinned: Vec<String>,
    pub warnings: Vec<String>,
}

impl PinReport {
    pub fn describe_failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .mismatches
            .iter()
            .map(|m| format!("database `{}` is at version {} but the lockfile pins {}", m.db_name, m.actual, m.locked))
            .collect();
        out.extend(self.unpinned.iter().map(|n| format!("database `{n}` is not pinned by the lockfile")));
        out
    }
}

/// Compares loaded database versions against a lockfile. An empty lockfile
/// passes vacuously; otherwise every loaded database must be pinned and match.
pub fn pin_check(manifests: &[DbManifest], lockfile: &Path) -> Result<PinReport, DbError> {
    let pins = read_lockfile(lockfile)?;
    let mut report = PinReport {
        lockfile: lockfile.display().to_string(),
        passed: true,
        mismatches: Vec::new(),
        unpinned: Vec::new(),
        warnings: Vec::new(),
    };
    if pins.is_empty() {
        report.warnings.push("no pins declared".into());
        return Ok(report);
    }
    let locked: BTreeMap<&str, &str> = pins.iter().map(|(n, v)| (n.as_str(), v.as_str())).collect();
    for m in manifests {
        match locked.get(m.db_name.as_str()) {
            Some(&v) if v == m.version => {}
            Some(&v) => report.mismatches.push(PinMismatch {
                db_name: m.db_name.clone(),
                locked: v.to_string(),
                actual: m.version.clone(),
            }),
            None => report.unpinned.push(m.db_name.clone()),
        }
    }
    for name in locked.keys() {
        if !manifests.iter().any(|m| m.db_name == *name) {
            report.warnings.push(format!("lockfile pins `{name}`, which was not loaded"));
        }
    }
    report.passed = report.mismatches.is_empty() && report.unpinned.is_empty();
    Ok(report)
}
