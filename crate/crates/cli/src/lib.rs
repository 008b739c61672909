//! The `farkas-check` command line.
//!
//! Exit codes: 0 valid (or success), 1 invalid proof or failed fuzz run,
//! 2 usage, I/O, parse or schema errors.

pub mod bench;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use farkas_core::checker::{CheckStats, Failure, DEFAULT_MAX_DEPTH};
use farkas_core::codec::{self, CodecError, VectorStyle};
use farkas_core::encoder::encode_with_backend;
use farkas_core::harness::{fuzz, FuzzConfig, NetworkShape};
use farkas_core::producer::{prove, FmLimits, ProveResult, ProverLimits};
use farkas_core::{check_proof, Backend, CheckOptions, Mode, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub const MAX_DEPTH_ENV: &str = "FARKAS_CHECK_MAX_DEPTH";

#[derive(Debug, Parser)]
#[command(name = "farkas-check", version, about = "Check, produce and benchmark Farkas-certificate UNSAT proofs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a proof tree.
    Check(CheckArgs),
    /// Encode a network and box property as a query.
    Encode(EncodeArgs),
    /// Decide a query, writing a proof when it is UNSAT.
    Prove(ProveArgs),
    /// Random encode, prove, check and mutate round trips.
    Fuzz(FuzzArgs),
    /// Time every proof in a directory under each backend and mode.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Partial,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::Partial => Mode::Partial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Dense,
    Sparse,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Dense => Backend::Dense,
            BackendArg::Sparse => Backend::Sparse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Native,
    /// Reserved for raw solver dumps; not implemented.
    MarabouRaw,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub proof: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "dense")]
    pub backend: BackendArg,
    /// Print a statistics object after the verdict.
    #[arg(long)]
    pub stats: bool,
    /// Report every failure instead of stopping at the first.
    #[arg(long)]
    pub keep_going: bool,
    #[arg(long, value_enum, default_value = "native")]
    pub from: InputFormat,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    pub network: PathBuf,
    pub property: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write tableau rows as sparse objects.
    #[arg(long)]
    pub sparse: bool,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    pub query: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = ProverLimits::default().max_relus)]
    pub max_relus: usize,
    #[arg(long, default_value_t = FmLimits::default().max_vars)]
    pub max_vars: usize,
    #[arg(long)]
    pub sparse: bool,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long, default_value_t = NetworkShape::default().max_relus)]
    pub max_relus: usize,
    #[arg(long, default_value_t = NetworkShape::default().max_inputs)]
    pub max_inputs: usize,
    /// Random inputs tried against each UNSAT answer.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub mutants: usize,
    /// Write every generated network, property and proof here.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub suite: PathBuf,
    /// Restrict to one backend (default: both).
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Restrict to one mode (default: both).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Timed runs per proof and configuration; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunStats {
    pub nodes_checked: usize,
    pub lemmas_checked: usize,
    pub lemmas_skipped: usize,
    pub max_depth: usize,
    pub equations_appended: usize,
    pub wall_time_ms: f64,
    pub backend: String,
    pub mode: String,
}

impl RunStats {
    fn new(stats: &CheckStats, wall_time_ms: f64, backend: Backend, mode: Mode) -> Self {
        RunStats {
            nodes_checked: stats.nodes_checked,
            lemmas_checked: stats.lemmas_checked,
            lemmas_skipped: stats.lemmas_skipped,
            max_depth: stats.max_depth,
            equations_appended: stats.equations_appended,
            wall_time_ms,
            backend: backend.name().to_owned(),
            mode: mode.name().to_owned(),
        }
    }
}

/// Runs one command, writing results to `out`. Errors map to exit code 2.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Check(a) => cmd_check(&a, out),
        Command::Encode(a) => cmd_encode(&a, out),
        Command::Prove(a) => cmd_prove(&a, out),
        Command::Fuzz(a) => cmd_fuzz(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn max_depth_from_env() -> Result<usize> {
    match std::env::var(MAX_DEPTH_ENV) {
        Err(_) => Ok(DEFAULT_MAX_DEPTH),
        Ok(s) => s
            .trim()
            .parse()
            .with_context(|| format!("{MAX_DEPTH_ENV} must be a non-negative integer, got {s:?}")),
    }
}

fn failure_json(f: &Failure) -> Value {
    json!({
        "reason": f.reason.name(),
        "path": f.path.0,
        "node": f.path.to_string(),
        "detail": f.detail,
    })
}

fn verdict_json(verdict: &Verdict, failures: &[Failure], keep_going: bool) -> Value {
    match verdict {
        Verdict::Valid => json!({ "verdict": "VALID" }),
        Verdict::Invalid(first) => {
            let mut v = failure_json(first);
            v["verdict"] = json!("INVALID");
            if keep_going {
                v["failures"] = failures.iter().map(failure_json).collect();
            }
            v
        }
    }
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    if a.from == InputFormat::MarabouRaw {
        bail!("--from marabou-raw is reserved and not implemented");
    }
    let max_depth = max_depth_from_env()?;
    let (mode, backend) = (Mode::from(a.mode), Backend::from(a.backend));
    let text = read(&a.proof)?;
    let start = Instant::now();
    let (verdict, failures, stats) = match codec::parse_proof(&text, backend) {
        Ok(p) => {
            let opts = CheckOptions {
                keep_going: a.keep_going,
                max_depth,
                ..CheckOptions::with_mode(mode)
            };
            let r = check_proof(&p, &opts);
            (r.verdict, r.failures, r.stats)
        }
        Err(CodecError::Structure(defects)) => {
            let failures: Vec<Failure> = defects
                .into_iter()
                .map(|d| Failure {
                    reason: farkas_core::checker::FailureReason::Structure,
                    path: d.path,
                    detail: d.kind.to_string(),
                })
                .collect();
            (Verdict::Invalid(failures[0].clone()), failures, CheckStats::default())
        }
        Err(e) => return Err(e).with_context(|| format!("cannot load {}", a.proof.display())),
    };
    let elapsed = bench::millis(start);
    writeln!(out, "{}", verdict_json(&verdict, &failures, a.keep_going))?;
    if a.stats {
        let s = RunStats::new(&stats, elapsed, backend, mode);
        writeln!(out, "{}", serde_json::to_string(&s)?)?;
    }
    Ok(if verdict.is_valid() { EXIT_OK } else { EXIT_INVALID })
}

fn style(sparse: bool) -> VectorStyle {
    if sparse {
        VectorStyle::Sparse
    } else {
        VectorStyle::Dense
    }
}

fn cmd_encode(a: &EncodeArgs, out: &mut dyn Write) -> Result<i32> {
    let net = codec::parse_network(&read(&a.network)?)
        .with_context(|| format!("cannot load {}", a.network.display()))?;
    let prop = codec::parse_property(&read(&a.property)?)
        .with_context(|| format!("cannot load {}", a.property.display()))?;
    let enc = encode_with_backend(&net, &prop, Backend::Dense)?;
    let text = codec::serialize_query(&enc.query, style(a.sparse));
    match &a.output {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn cmd_prove(a: &ProveArgs, out: &mut dyn Write) -> Result<i32> {
    let query = codec::parse_query(&read(&a.query)?, Backend::Dense)
        .with_context(|| format!("cannot load {}", a.query.display()))?;
    let limits = ProverLimits {
        max_relus: a.max_relus,
        fm: FmLimits {
            max_vars: a.max_vars,
            ..FmLimits::default()
        },
    };
    match prove(&query, limits)? {
        ProveResult::Sat(x) => {
            let witness: Vec<String> = x.to_values().iter().map(ToString::to_string).collect();
            writeln!(out, "{}", json!({ "result": "SAT", "witness": witness }))?;
        }
        ProveResult::Unsat(p) => {
            write_file(&a.output, &codec::serialize_proof(&p, style(a.sparse)))?;
            let summary = json!({
                "result": "UNSAT",
                "nodes": p.root.count_nodes(),
                "leaves": p.root.count_leaves(),
                "depth": p.root.depth(),
                "proof": a.output.display().to_string(),
            });
            writeln!(out, "{summary}")?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_fuzz(a: &FuzzArgs, out: &mut dyn Write) -> Result<i32> {
    let config = FuzzConfig {
        seed: a.seed,
        count: a.count,
        shape: NetworkShape {
            max_relus: a.max_relus,
            max_inputs: a.max_inputs,
            ..NetworkShape::default()
        },
        witness_samples: a.samples,
        mutants_per_kind: a.mutants,
        limits: ProverLimits {
            max_relus: a.max_relus.max(ProverLimits::default().max_relus),
            ..ProverLimits::default()
        },
    };
    let report = fuzz(config);
    if let Some(dir) = &a.emit {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for case in &report.cases {
            let stem = dir.join(format!("case_{:04}", case.index));
            write_file(&stem.with_extension("net.json"), &codec::serialize_network(&case.network))?;
            write_file(
                &stem.with_extension("prop.json"),
                &codec::serialize_property(&case.property),
            )?;
            if let Some(p) = &case.proof {
                write_file(
                    &stem.with_extension("proof.json"),
                    &codec::serialize_proof(p, VectorStyle::Dense),
                )?;
            }
        }
    }
    write!(out, "{report}")?;
    Ok(if report.all_ok() { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let files = bench::suite_files(&a.suite)?;
    if files.is_empty() {
        bail!("no *.json proofs in {}", a.suite.display());
    }
    let configs = bench::configs(a.backend.map(Backend::from), a.mode.map(Mode::from));
    let rows = bench::run(&files, &configs, a.repeat.max(1), max_depth_from_env()?)?;
    match &a.output {
        Some(path) => {
            let f = fs::File::create(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            bench::write_csv(&rows, f)?;
        }
        None => bench::write_csv(&rows, &mut *out)?,
    }
    for (backend, mode, total) in bench::totals(&rows) {
        eprintln!("{backend:>6} {mode:>7}: {total:10.3} ms");
    }
    Ok(EXIT_OK)
}
