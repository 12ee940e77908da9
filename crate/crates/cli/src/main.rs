//! `rough`: sampling, lifting, audits, solvers and Monte-Carlo studies from the command line.
//!
//! Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical failure. Errors
//! are reported as a single `error=<kind> message=<text>` line on stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rough_core::Error;

use crate::commands::Context;
use crate::config::RunConfig;

/// Environment variable that sets the worker count when `--workers` is absent.
const WORKERS_ENV: &str = "ROUGH_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let text = e.to_string();
        match e {
            Error::NonFinite { .. }
            | Error::NoConvergence { .. }
            | Error::EmbeddingFailed
            | Error::NotClosed { .. }
            | Error::HistoryGap { .. } => CliError::Numerical(text),
            _ => CliError::Config(text),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rough", version, about = "Level-3 rough-path integration experiments")]
struct Cli {
    /// TOML configuration with `[driver]`, `[field]` and per-command sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed of the driver and of the Monte-Carlo studies.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the Monte-Carlo studies (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample an fBm driver and write it as CSV.
    Sample,
    /// Build the level-3 lift (and delayed families when delays are set).
    Lift,
    /// Audit the algebraic identities of the lift.
    Validate {
        /// Perturb one cell area before auditing.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Solve `dy = σ(y) dx`.
    SolveSde,
    /// Solve the delay equation with a constant initial segment.
    SolveDde,
    /// Error against a 16x self-reference over a ladder of grids.
    Convergence,
    /// Monte-Carlo check of delayed areas, or of their moment scaling.
    McArea,
}

fn workers(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let value = match flag {
        Some(k) => Some(k),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    if value == Some(0) {
        return Err(CliError::Config("the worker count must be positive".into()));
    }
    Ok(value)
}

fn run(cli: Cli) -> Result<commands::Summary, CliError> {
    if let Some(k) = workers(cli.workers)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.driver.seed = seed;
        config.mc_area.seed = seed;
    }
    let inject_fault = matches!(cli.command, Command::Validate { inject_fault: true });
    let ctx = Context {
        config,
        out: cli.out,
        inject_fault,
    };
    match cli.command {
        Command::Sample => commands::sample(&ctx),
        Command::Lift => commands::lift(&ctx),
        Command::Validate { .. } => commands::validate(&ctx),
        Command::SolveSde => commands::solve_sde(&ctx),
        Command::SolveDde => commands::solve_dde(&ctx),
        Command::Convergence => commands::convergence(&ctx),
        Command::McArea => commands::mc_area(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().to_string();
            eprintln!("error=config message={message}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(summary) => {
            for (k, v) in summary {
                println!("{k}={v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = e.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
            eprintln!("error={} message={message}", e.kind());
            ExitCode::from(e.code())
        }
    }
}
