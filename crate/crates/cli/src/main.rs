use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use citecheck_core::bibdb::{self, BibDatabase, Delimiter, IngestOptions, PinReport};
use citecheck_core::highlight::highlight_pdf;
use citecheck_core::model::summary_record;
use citecheck_core::pipeline::{run_path, DocumentOutcome};
use citecheck_core::recognize::{labeler_by_name, Labeler};
use citecheck_core::report::{self, EnvironmentInfo, LabelerIdentity, VerificationReport};
use citecheck_core::MatcherConfig;

const CLEAN: u8 = 0;
const CANDIDATES: u8 = 1;
const FAILURE: u8 = 2;

/// Flags citations in scientific PDFs that match no entry of the given
/// bibliographic databases.
#[derive(Parser, Debug)]
#[command(name = "citecheck", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// PDF files to check
    #[arg(short, long, num_args = 1.., value_name = "PDF")]
    input: Vec<PathBuf>,
    /// Directory for JSON reports and highlighted PDFs
    #[arg(short, long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Ingested database directory; repeat to chain, tried in the order given
    #[arg(long = "db", value_name = "PATH")]
    dbs: Vec<PathBuf>,
    /// Similarity needed to count as a match (0-1, or a 0-100 percentage)
    #[arg(long, default_value_t = 0.9)]
    threshold: f64,
    /// Lockfile pinning database versions
    #[arg(long, value_name = "PATH")]
    lockfile: Option<PathBuf>,
    /// Field labeler: "rules" or "linear:<weights.tsv>"
    #[arg(long, default_value = "rules")]
    labeler: String,
    /// Print the JSON report(s) instead of the summary
    #[arg(long)]
    json_only: bool,
    /// Skip writing highlighted PDFs
    #[arg(long)]
    no_highlight: bool,
    /// Record peak memory and print per-stage timings to stderr
    #[arg(long)]
    profile: bool,
    /// Documents processed in parallel (default: one per CPU)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a database from a CSV/TSV dump with a `title` column
    Ingest {
        source: PathBuf,
        /// Database name
        #[arg(long)]
        name: String,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
        /// Field delimiter (default: from the file extension)
        #[arg(long, value_enum)]
        delimiter: Option<DelimiterArg>,
    },
    /// Write a lockfile pinning the current versions of databases
    Lock {
        #[arg(long = "db", value_name = "PATH", required = true)]
        dbs: Vec<PathBuf>,
        /// Lockfile path (default: stdout)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DelimiterArg {
    Comma,
    Tab,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Some(Command::Ingest { source, name, out, delimiter }) => ingest(&source, &name, &out, delimiter),
        Some(Command::Lock { dbs, out }) => lock(&dbs, out.as_deref()),
        None => check(&cli.check),
    };
    ExitCode::from(code)
}

fn fail(msg: impl std::fmt::Display) -> u8 {
    eprintln!("citecheck: {msg}");
    FAILURE
}

fn ingest(source: &Path, name: &str, out: &Path, delimiter: Option<DelimiterArg>) -> u8 {
    let options = IngestOptions {
        delimiter: delimiter.map(|d| match d {
            DelimiterArg::Comma => Delimiter::Comma,
            DelimiterArg::Tab => Delimiter::Tab,
        }),
        created_at: None,
    };
    match bibdb::ingest(source, name, out, &options) {
        Ok(r) => {
            for m in &r.malformed {
                eprintln!("citecheck: {}:{}: {}", source.display(), m.line, m.reason);
            }
            println!(
                "{}: {} entries, version {} ({} empty titles skipped, {} malformed rows)",
                r.path.display(),
                r.manifest.entry_count,
                r.manifest.version,
                r.skipped_empty_title,
                r.malformed.len()
            );
            CLEAN
        }
        Err(e) => fail(e),
    }
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<BibDatabase>, u8> {
    paths.iter().map(|p| bibdb::load(p).map_err(fail)).collect()
}

fn lock(paths: &[PathBuf], out: Option<&Path>) -> u8 {
    let dbs = match load_all(paths) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let text = bibdb::lockfile_text(dbs.iter().map(BibDatabase::manifest));
    match out {
        Some(path) => match fs::write(path, text) {
            Ok(()) => CLEAN,
            Err(e) => fail(format!("{}: {e}", path.display())),
        },
        None => {
            print!("{text}");
            CLEAN
        }
    }
}

/// Everything printed for one input, assembled off the main thread.
struct DocOutput {
    stdout: String,
    stderr: String,
    code: u8,
    timings: Option<Vec<citecheck_core::StageTiming>>,
}

struct Context<'a> {
    args: &'a CheckArgs,
    dbs: Vec<BibDatabase>,
    labeler: Box<dyn Labeler>,
    cfg: MatcherConfig,
    pin: Option<PinReport>,
}

fn check(args: &CheckArgs) -> u8 {
    if args.input.is_empty() {
        return fail("no input files; pass them with -i");
    }
    if args.dbs.is_empty() {
        return fail("no database given; pass one or more with --db");
    }
    let cfg = match MatcherConfig::from_cutoff(args.threshold) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let labeler = match labeler_by_name(&args.labeler) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let dbs = match load_all(&args.dbs) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let mut code = CLEAN;
    let pin = match &args.lockfile {
        None => None,
        Some(lock) => {
            let manifests: Vec<_> = dbs.iter().map(|d| d.manifest().clone()).collect();
            match bibdb::pin_check(&manifests, lock) {
                Ok(r) => {
                    for w in &r.warnings {
                        eprintln!("citecheck: warning: {w}");
                    }
                    for f in r.describe_failures() {
                        code = fail(format!("pin check failed: {f}"));
                    }
                    Some(r)
                }
                Err(e) => return fail(e),
            }
        }
    };
    if let Some(dir) = &args.output {
        if let Err(e) = fs::create_dir_all(dir) {
            return fail(format!("{}: {e}", dir.display()));
        }
    }

    let ctx = Context { args, dbs, labeler, cfg, pin };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let outputs: Vec<DocOutput> = pool.install(|| ctx.args.input.par_iter().map(|p| process(&ctx, p)).collect());

    let many = args.input.len() > 1;
    let mut json = Vec::new();
    let mut per_paper = Vec::new();
    for (path, out) in args.input.iter().zip(outputs) {
        eprint!("{}", out.stderr);
        if args.json_only {
            if !out.stdout.is_empty() {
                json.push(out.stdout);
            }
        } else if !out.stdout.is_empty() {
            if many {
                println!("==> {} <==", path.display());
            }
            print!("{}", out.stdout);
        }
        per_paper.extend(out.timings);
        code = code.max(out.code);
    }
    if args.json_only {
        match json.len() {
            0 => {}
            1 => print!("{}", json[0]),
            _ => println!("[\n{}]", json.iter().map(|j| j.trim_end()).collect::<Vec<_>>().join(",\n")),
        }
    }
    if args.profile && !per_paper.is_empty() {
        eprint!("{}", report::timing_table(&report::summarize_timings(&per_paper)));
        if let Some(kb) = report::peak_memory_kb() {
            eprintln!("peak memory: {kb} kB");
        }
    }
    code
}

fn process(ctx: &Context, path: &Path) -> DocOutput {
    let mut out = DocOutput { stdout: String::new(), stderr: String::new(), code: CLEAN, timings: None };
    let outcome = match run_path(path, &ctx.dbs, ctx.labeler.as_ref(), &ctx.cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(out.stderr, "citecheck: {e}");
            out.code = FAILURE;
            return out;
        }
    };
    let report = build_report(ctx, path, &outcome);
    out.code = if outcome.is_all_clear() { CLEAN } else { CANDIDATES };

    if let Some(dir) = &ctx.args.output {
        let stem = path.file_stem().map_or_else(|| "document".into(), |s| s.to_string_lossy().into_owned());
        let report_path = dir.join(format!("{stem}.report.json"));
        if let Err(e) = fs::write(&report_path, report.to_json()) {
            let _ = writeln!(out.stderr, "citecheck: {}: {e}", report_path.display());
            out.code = FAILURE;
        }
        if !ctx.args.no_highlight {
            let pdf_path = dir.join(format!("{stem}.flagged.pdf"));
            if let Err(e) = highlight_pdf(path, &outcome.flagged, &outcome.unverifiable, &pdf_path) {
                let _ = writeln!(out.stderr, "citecheck: highlighting {}: {e}", path.display());
                out.code = FAILURE;
            }
        }
    }

    if ctx.args.json_only {
        out.stdout = report.to_json();
    } else {
        out.stdout = summary(&outcome);
    }
    out.timings = Some(outcome.timings);
    out
}

fn build_report(ctx: &Context, path: &Path, o: &DocumentOutcome) -> VerificationReport {
    VerificationReport::new(
        path.display().to_string(),
        ctx.dbs.iter().map(|d| d.manifest().clone()).collect(),
        LabelerIdentity { name: ctx.labeler.name().to_string(), version: ctx.labeler.version().to_string() },
        ctx.cfg.threshold,
        o.extracted,
        &o.flagged,
        &o.unverifiable,
        o.timings.clone(),
        EnvironmentInfo::capture(ctx.args.profile),
        ctx.pin.clone(),
    )
}

/// Terminal rendering of one document's outcome.
fn summary(o: &DocumentOutcome) -> String {
    if o.is_all_clear() {
        return "All Clear!\n".to_string();
    }
    let mut s = String::new();
    for c in &o.flagged {
        let _ = writeln!(s, "{}", summary_record(c));
    }
    if !o.unverifiable.is_empty() {
        s.push_str("Unverifiable (no title recognized):\n");
        for c in &o.unverifiable {
            let _ = writeln!(s, "  {}", c.raw_text);
        }
    }
    s
}
