use std::path::PathBuf;

use adaptprune::oracle::CutoffReport;
use adaptprune::synth::{corpus_rng, random_grid};
use adaptprune::{cutoff_discrepancy, Strategy};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{load_grid, to_json, TuningArgs};
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Token dump to check.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub input: Option<PathBuf>,
    /// Check this many generated grids instead of a dump.
    #[arg(long)]
    pub random: Option<u64>,
    /// Corpus seed for --random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Give the engine a suppression radius (the reference never has one).
    #[arg(long, hide = true)]
    pub cutoff_multiplier: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Mismatch {
    grid: String,
    report: CutoffReport,
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    grids: usize,
    matched: usize,
    max_relative_score_diff: f64,
    mismatches: Vec<Mismatch>,
}

pub fn run(args: VerifyArgs) -> Result<(), CliError> {
    let mut config = args.tuning.config(Strategy::AdaptPrune, None);
    config.cutoff_multiplier = args.cutoff_multiplier;
    if let Some(m) = args.cutoff_multiplier {
        if !(m > 0.0 && m.is_finite()) {
            return Err(CliError::usage(format!(
                "--cutoff-multiplier must be positive, got {m}"
            )));
        }
    }

    let reports: Vec<(String, CutoffReport)> = match (&args.input, args.random) {
        (Some(path), _) => {
            let grid = load_grid(path)?;
            vec![(
                path.display().to_string(),
                cutoff_discrepancy(&grid, &config)?,
            )]
        }
        (None, Some(count)) => (0..count)
            .into_par_iter()
            .map(|i| {
                let grid = random_grid(&mut corpus_rng(args.seed, i), 200, 16);
                cutoff_discrepancy(&grid, &config).map(|r| (format!("random:{}:{i}", args.seed), r))
            })
            .collect::<Result<Vec<_>, _>>()?,
        (None, None) => unreachable!("clap requires --input or --random"),
    };

    let output = VerifyOutput {
        grids: reports.len(),
        matched: reports.iter().filter(|(_, r)| r.sequences_match()).count(),
        max_relative_score_diff: reports
            .iter()
            .map(|(_, r)| r.max_relative_score_diff)
            .fold(0.0, f64::max),
        mismatches: reports
            .into_iter()
            .filter(|(_, r)| !r.sequences_match())
            .map(|(grid, report)| Mismatch { grid, report })
            .collect(),
    };
    print!("{}", String::from_utf8_lossy(&to_json(&output)?));
    if output.mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "{} of {} grids diverge from the reference",
            output.mismatches.len(),
            output.grids
        )))
    }
}
