//! Command-line experiment runner for the `swarmsgd` simulator.
//!
//! Subcommands read one JSON document (`--config`) and write plot-ready CSV
//! and JSON files to `--out` (or the configured `output_dir`). Replications
//! run in parallel on `--jobs` threads; outputs do not depend on the thread
//! count.

pub mod commands;
pub mod config;
pub mod experiment;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{BoundsParams, ComparisonReport, SweepConfig};
pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input document.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    /// A runtime inequality check failed.
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Validation(_) => 1,
        }
    }
}

impl From<swarmsgd::Error> for CliError {
    fn from(e: swarmsgd::Error) -> Self {
        match e {
            swarmsgd::Error::InvalidParameter { .. }
            | swarmsgd::Error::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "swarmsgd",
    version,
    about = "Swarming-based asynchronous SGD experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured scheme and write one trace CSV per replication.
    Simulate(CommonArgs),
    /// Compare threshold-crossing times of the swarm and centralized schemes.
    Compare(CommonArgs),
    /// Evaluate step-size conditions and error bounds for a parameter file.
    Bounds(CommonArgs),
    /// Check the runtime inequalities along short swarm trajectories.
    Validate(CommonArgs),
    /// Tabulate bound quantities over a parameter grid.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for replications (default: all cores).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Master seed; overrides `master_seed`.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_experiment(args: &CommonArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::from_json(&read(&args.config)?)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialization cannot fail")
    );
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => {
            let (cfg, out) = load_experiment(&args)?;
            let summary = commands::simulate(&cfg, &out)?;
            println!(
                "wrote {} trace(s) and summary.json to {}",
                summary.runs.len(),
                out.display()
            );
        }
        Command::Compare(args) => {
            let (cfg, out) = load_experiment(&args)?;
            print_json(&commands::compare(&cfg, &out)?);
        }
        Command::Bounds(args) => {
            let params = BoundsParams::from_json(&read(&args.config)?)?;
            let report = commands::bounds(&params);
            print_json(&report);
            if let Some(out) = &args.out {
                std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(e.to_string()))?;
                let text = serde_json::to_string_pretty(&report)
                    .expect("report serialization cannot fail")
                    + "\n";
                std::fs::write(out.join("bounds.json"), text)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
        }
        Command::Validate(args) => {
            let (cfg, out) = load_experiment(&args)?;
            let (_, summary) = commands::validate(&cfg, &out)?;
            print_json(&summary);
            if summary.lemma4_violations > 0 {
                return Err(CliError::Validation(format!(
                    "{} violation(s) of the deterministic inequality",
                    summary.lemma4_violations
                )));
            }
            if !summary.passed {
                return Err(CliError::Validation(format!(
                    "Monte-Carlo pass rate {} below {}",
                    summary.lemma2_pass_rate, summary.min_lemma2_pass_rate
                )));
            }
        }
        Command::Sweep(args) => {
            let sweep = SweepConfig::from_json(&read(&args.config)?)?;
            let csv = commands::sweep(&sweep);
            match &args.out {
                Some(out) => {
                    std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(e.to_string()))?;
                    std::fs::write(out.join("sweep.csv"), csv)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                }
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn jobs(command: &Command) -> Option<usize> {
    match command {
        Command::Simulate(a)
        | Command::Compare(a)
        | Command::Bounds(a)
        | Command::Validate(a)
        | Command::Sweep(a) => a.jobs,
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs(&cli.command) {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
