//! `adaptprune` command-line front end.

mod args;
mod commands;
mod error;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "adaptprune",
    version,
    about = "Adaptive visual token pruning: prune, compare, verify, model FLOPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prune one token dump and write a run report.
    Prune(commands::prune::PruneArgs),
    /// Run several strategies over one or more dumps side by side.
    Compare(commands::compare::CompareArgs),
    /// Check the engine against the brute-force reference.
    Verify(commands::verify::VerifyArgs),
    /// Analytic prefill FLOPs with and without pruning.
    Flops(commands::flops::FlopsArgs),
    /// Average attention over many dumps, optionally rendering a heatmap.
    Stats(commands::stats::StatsArgs),
    /// Generate synthetic token dumps.
    Synth(commands::synth::SynthArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ADAPTPRUNE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::usage(format!(
            "ADAPTPRUNE_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Prune(a) => commands::prune::run(a),
        Command::Compare(a) => commands::compare::run(a),
        Command::Verify(a) => commands::verify::run(a),
        Command::Flops(a) => commands::flops::run(a),
        Command::Stats(a) => commands::stats::run(a),
        Command::Synth(a) => commands::synth::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}
