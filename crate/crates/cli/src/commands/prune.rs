use std::path::PathBuf;

use adaptprune::Strategy;
use clap::Args;

use crate::args::{emit, load_grid, parse_strategy, to_json, TuningArgs};
use crate::error::CliError;
use crate::report::run_report;

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Token dump (.atpk binary or .json).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value = "adaptprune", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Seed for the randomized strategies.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Include the per-iteration selection trace.
    #[arg(long)]
    pub trace: bool,
    /// Include wall time in the report (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

pub fn run(args: PruneArgs) -> Result<(), CliError> {
    let grid = load_grid(&args.input)?;
    let mut config = args.tuning.config(args.strategy, args.seed);
    config.trace = args.trace;
    let report = run_report(&grid, &config, args.timing)?;
    emit(args.output.as_ref(), &to_json(&report)?)
}
