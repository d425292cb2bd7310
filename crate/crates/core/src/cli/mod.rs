//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error,
//! 3 internal error.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Validate inputs and report what would run, writing nothing.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize raw CSVs and write a validation report.
    Ingest(CommonArgs),
    /// Run the configured strategies and write the results panel.
    Backtest(CommonArgs),
    /// Search MACD parameters per symbol with the genetic algorithm.
    Optimize(CommonArgs),
    /// Emit per-trade scatter points and histogram bins for plotting.
    Plotdata(CommonArgs),
    /// Render stored panels as text and CSV with a profit ranking.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Panel JSON files to merge; defaults to out_dir/panel.json.
        panels: Vec<PathBuf>,
    },
}

#[derive(Debug, Parser)]
#[command(name = "macdlab", version, about = "Deterministic daily-bar strategy backtester")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_file(&common.config).map_err(CliError::Config)?;
    // Overrides apply before hashing, so the hash reflects the effective run.
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest(common) => commands::cmd_ingest(&load_config(common)?, common.dry_run),
        Command::Backtest(common) => {
            commands::cmd_backtest(&load_config(common)?, common.dry_run)
        }
        Command::Optimize(common) => {
            commands::cmd_optimize(&load_config(common)?, common.dry_run)
        }
        Command::Plotdata(common) => {
            commands::cmd_plotdata(&load_config(common)?, common.dry_run)
        }
        Command::Report { common, panels } => {
            commands::cmd_report(&load_config(common)?, panels, common.dry_run)
        }
    }
}

/// Entry point used by the binary: parses args, runs, maps errors to exit
/// codes.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successes; real parse errors are usage
            // errors (exit 1).
            let failed = e.use_stderr();
            let _ = e.print();
            return if failed { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
