//! Command-line driver: single games, Monte Carlo experiments, lemma sweeps
//! and λ tables.
//!
//! Exit codes: 0 on success, 1 when a bound or lemma is violated, 2 when the
//! configuration is unusable or a run cannot complete.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctsexperts::engine::{run_trial, transcript_rows, write_rows_csv, ExperimentSpec};
use ctsexperts::specfun::{lambda, lambda_upper_bound};
use ctsexperts::verifier::{run_sweeps, SWEEPS};
use ctsexperts::{engine, Error};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "ctsexperts", version, about = "Potential-based experts algorithms and their regret bounds")]
struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game (trial 0) and write its transcript as transcript.csv
    Simulate(RunArgs),
    /// Run every trial and write summary.csv and summary.json
    Montecarlo(RunArgs),
    /// Run lemma sweeps and write verify.json
    Verify {
        /// Comma-separated sweep names (default: all)
        #[arg(long, value_delimiter = ',')]
        lemma: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write lambda_table.csv with columns alpha,lambda,upper_bound
    Table {
        #[arg(long, default_value_t = 1e6)]
        alpha_max: f64,
        /// Grid size; alpha + 1 is log-spaced on [1, alpha_max + 1]
        #[arg(long, default_value_t = 61)]
        points: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON)
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a spec field by dotted path, e.g. `--set path.cov.rho=0.3`;
    /// repeatable, last one wins
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Why a command did not succeed.
enum Failure {
    Violations(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Montecarlo(args) => montecarlo(&args),
        Command::Verify { lemma, out } => verify(&lemma, &out),
        Command::Table {
            alpha_max,
            points,
            out,
        } => table(alpha_max, points, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_spec(args: &RunArgs) -> Result<ExperimentSpec, Failure> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.spec.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.spec.display())))?;
    for assignment in &args.overrides {
        apply_override(&mut value, assignment).map_err(Failure::Config)?;
    }
    let spec: ExperimentSpec = serde_json::from_value(value)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.spec.display())))?;
    spec.resolve()?;
    Ok(spec)
}

/// Sets `key` (a dotted path) to `value`, parsed as JSON when possible and as
/// a string otherwise. Missing objects along the path are created.
fn apply_override(root: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override {assignment:?} is not KEY=VALUE"))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("override key {key:?} has an empty segment"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for segment in key.split('.') {
        node = match node {
            Value::Array(items) => {
                let index: usize = segment
                    .parse()
                    .map_err(|_| format!("override {key:?}: {segment:?} is not an array index"))?;
                let len = items.len();
                items
                    .get_mut(index)
                    .ok_or_else(|| format!("override {key:?}: index {index} out of range ({len} items)"))?
            }
            other => {
                if other.is_null() {
                    *other = Value::Object(Default::default());
                }
                match other {
                    Value::Object(map) => map.entry(segment).or_insert(Value::Null),
                    _ => return Err(format!("override {key:?}: {segment:?} is inside a non-object")),
                }
            }
        };
    }
    *node = value;
    Ok(())
}

fn create_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let spec = load_spec(args)?;
    let env = spec.resolve()?;
    create_out(&args.out)?;
    let transcript = run_trial(&spec, &env, 0, None)?;
    let rows = transcript_rows(&spec, &transcript)?;
    let path = args.out.join("transcript.csv");
    write_rows_csv(BufWriter::new(fs::File::create(&path)?), &rows)?;
    let violations = rows.iter().filter(|r| r.violation).count();
    println!(
        "{} rounds, final max regret {}, wrote {}",
        transcript.final_state.round,
        transcript.final_state.max_regret(),
        path.display()
    );
    if violations > 0 {
        return Err(Failure::Violations(format!(
            "{violations} bound violations; see rows with violation=true in {}",
            path.display()
        )));
    }
    Ok(())
}

fn montecarlo(args: &RunArgs) -> Result<(), Failure> {
    let spec = load_spec(args)?;
    create_out(&args.out)?;
    let summary = engine::monte_carlo(&spec)?;
    let csv_path = args.out.join("summary.csv");
    let json_path = args.out.join("summary.json");
    summary.write_csv(BufWriter::new(fs::File::create(&csv_path)?))?;
    fs::write(&json_path, summary.to_json()? + "\n")?;
    println!(
        "{} trials, wrote {} and {}",
        summary.trials,
        csv_path.display(),
        json_path.display()
    );
    if summary.violation_count > 0 {
        return Err(Failure::Violations(format!(
            "{} bound violations; listed in {} and flagged in {}",
            summary.violation_count,
            json_path.display(),
            csv_path.display()
        )));
    }
    Ok(())
}

fn verify(lemmas: &[String], out: &Path) -> Result<(), Failure> {
    let names: Vec<String> = lemmas
        .iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if let Some(bad) = names.iter().find(|n| !SWEEPS.contains(&n.as_str())) {
        return Err(Failure::Config(format!(
            "unknown lemma {bad:?}; expected one of {}",
            SWEEPS.join(", ")
        )));
    }
    create_out(out)?;
    let reports = run_sweeps(&names)?;
    let path = out.join("verify.json");
    fs::write(&path, serde_json::to_string_pretty(&reports).map_err(Error::from)? + "\n")?;
    let mut failed = Vec::new();
    for r in &reports {
        let status = if r.passed() { "pass" } else { "FAIL" };
        println!(
            "{status} {:<30} points {:>9}  worst margin {:+.3e}  violations {}",
            r.lemma_id, r.points_checked, r.worst_margin, r.violation_count
        );
        if !r.passed() {
            failed.push(r.lemma_id.as_str());
        }
    }
    if !failed.is_empty() {
        return Err(Failure::Violations(format!(
            "violations in {}; details in {}",
            failed.join(", "),
            path.display()
        )));
    }
    Ok(())
}

fn table(alpha_max: f64, points: usize, out: &Path) -> Result<(), Failure> {
    if !(alpha_max > 0.0 && alpha_max.is_finite()) {
        return Err(Failure::Config(format!("--alpha-max must be positive, got {alpha_max}")));
    }
    if points < 2 {
        return Err(Failure::Config("--points must be at least 2".into()));
    }
    create_out(out)?;
    let path = out.join("lambda_table.csv");
    let mut text = String::from("alpha,lambda,upper_bound\n");
    let top = alpha_max.ln_1p();
    for k in 0..points {
        let alpha = if k == points - 1 {
            alpha_max
        } else {
            (top * k as f64 / (points - 1) as f64).exp_m1()
        };
        let l = lambda(alpha)?;
        text.push_str(&format!("{alpha},{l},{}\n", lambda_upper_bound(alpha)));
    }
    fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}
