//! `rvgc analyze|simulate|verify --config <path> --out <dir>`
//!
//! Exit codes: 0 success, 1 runtime failure, 2 config error, 3 unsupported
//! degeneracy, 4 verification failure. `RVGC_THREADS` sets the worker count.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "rvgc",
    version,
    about = "Tail asymptotics for regularly varying margins under a Gaussian copula"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cone indices, limit measures and asymptotic tail estimates.
    Analyze(Args),
    /// Hill curves and conditional exceedance curves from a seeded sample.
    Simulate(Args),
    /// Monte Carlo check of the asymptotic slopes.
    Verify(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// TOML job file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV output, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Slope tolerance in percent, overriding the config.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Simulation seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RVGC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("RVGC_THREADS: {raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    let (Command::Analyze(args) | Command::Simulate(args) | Command::Verify(args)) = &cli.command;
    let mut job = config::load(&args.config)?;
    if let Some(pct) = args.tolerance {
        job.tolerance = config::check_tolerance(pct).map_err(|m| CliError::Config(format!("--tolerance: {m}")))?;
    }
    if let (Some(seed), Some(sim)) = (args.seed, job.simulation.as_mut()) {
        sim.seed = seed;
    }
    std::fs::create_dir_all(&args.out)?;
    match &cli.command {
        Command::Analyze(_) => commands::analyze(&job, &args.out),
        Command::Simulate(_) => commands::simulate(&job, &args.out),
        Command::Verify(_) => commands::verify(&job, &args.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let failure = match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            outcome.failure
        }
        Err(e) => Some(e),
    };
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
