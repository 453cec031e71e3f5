//! `chainmon`: generate chains, select monitors, sweep budgets, and check
//! the closed forms against sampling and enumeration.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal invariant violation. `CHAINMON_WORKERS` sets the thread count.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{EdgeListArgs, ExperimentArgs, GenerateArgs, SelectArgs, TripsArgs, ValidateArgs};

/// Bad flags, config values, or option combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

/// A result that breaks an invariant the library promises.
#[derive(Debug)]
pub struct InternalError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for InternalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for UsageError {}
impl std::error::Error for InternalError {}

#[derive(Parser)]
#[command(
    name = "chainmon",
    version,
    about = "Markov chain monitoring experiments"
)]
struct Cli {
    /// TOML file with one section per subcommand; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic chain and item placement in the native format.
    Generate(GenerateArgs),
    /// Run one selector and print its per-step trace.
    Select(SelectArgs),
    /// Sweep algorithms and budgets over several graphs into a report CSV.
    Experiment(ExperimentArgs),
    /// Compare a closed-form objective with a sampling or enumeration oracle.
    Validate(ValidateArgs),
    /// Convert external data to the native format.
    #[command(subcommand)]
    Ingest(IngestCommand),
}

#[derive(Subcommand)]
enum IngestCommand {
    /// Undirected SNAP-style edge list.
    EdgeList(EdgeListArgs),
    /// Bike-share trip log plus station inventories.
    Trips(TripsArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if err.downcast_ref::<InternalError>().is_some() {
        return 3;
    }
    match err.downcast_ref::<chainmon::Error>() {
        Some(e) if e.is_usage() => 1,
        _ => 2,
    }
}

fn configure_workers() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("CHAINMON_WORKERS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        UsageError(format!(
            "CHAINMON_WORKERS must be a positive integer, got `{value}`"
        ))
    })?;
    if threads == 0 {
        return Err(UsageError("CHAINMON_WORKERS must be at least 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| InternalError(e.to_string()))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_workers()?;
    let file = config::ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(mut args) => {
            if let Some(f) = file.generate {
                args.fill_from(f);
            }
            commands::generate(args)
        }
        Command::Select(mut args) => {
            if let Some(f) = file.select {
                args.fill_from(f);
            }
            commands::select(args)
        }
        Command::Experiment(mut args) => {
            if let Some(f) = file.experiment {
                args.fill_from(f);
            }
            commands::experiment(args)
        }
        Command::Validate(mut args) => {
            if let Some(f) = file.validate {
                args.fill_from(f);
            }
            commands::validate(args)
        }
        Command::Ingest(IngestCommand::EdgeList(mut args)) => {
            if let Some(f) = file.ingest.and_then(|i| i.edge_list) {
                args.fill_from(f);
            }
            commands::ingest_edge_list(args)
        }
        Command::Ingest(IngestCommand::Trips(mut args)) => {
            if let Some(f) = file.ingest.and_then(|i| i.trips) {
                args.fill_from(f);
            }
            commands::ingest_trips(args)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
