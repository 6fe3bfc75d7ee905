use std::path::PathBuf;

use adaptprune::Strategy;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{emit, load_grid, to_json, TuningArgs};
use crate::error::CliError;
use crate::report::{aligned_table, run_report, RunReport};

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Token dump; repeat for several.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Comma-separated strategy names, or "all".
    #[arg(long, default_value = "adaptprune,fastv_topk")]
    pub strategies: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON path. The aligned table goes to standard output when this is set,
    /// to standard error otherwise.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct InputReports {
    input: String,
    reports: Vec<RunReport>,
}

#[derive(Debug, Serialize)]
struct CompareOutput {
    strategies: Vec<&'static str>,
    inputs: Vec<InputReports>,
}

fn parse_list(list: &str) -> Result<Vec<Strategy>, CliError> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Strategy::ALL.to_vec());
    }
    let mut out: Vec<Strategy> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let s: Strategy = name.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("--strategies names no strategy"));
    }
    out.sort_by_key(|s| s.name());
    Ok(out)
}

pub fn run(args: CompareArgs) -> Result<(), CliError> {
    let strategies = parse_list(&args.strategies)?;
    for &s in &strategies {
        args.tuning.config(s, args.seed).validate()?;
    }
    let mut inputs = args.input.clone();
    inputs.sort();
    inputs.dedup();

    let results: Vec<Result<InputReports, CliError>> = inputs
        .par_iter()
        .map(|path| {
            let grid = load_grid(path)?;
            let reports = strategies
                .iter()
                .map(|&s| run_report(&grid, &args.tuning.config(s, args.seed), false))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| match e {
                    CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
                    other => other,
                })?;
            Ok(InputReports {
                input: path.display().to_string(),
                reports,
            })
        })
        .collect();
    let inputs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for entry in &inputs {
        for r in &entry.reports {
            rows.push(vec![
                entry.input.clone(),
                r.strategy.clone(),
                r.retained.len().to_string(),
                format!("{:.4}", r.metrics.dispersion),
                format!("{:.4}", r.metrics.redundancy),
                format!("{:.4}", r.metrics.score_mass),
            ]);
        }
    }
    let table = aligned_table(
        &[
            "input",
            "strategy",
            "kept",
            "dispersion",
            "redundancy",
            "score_mass",
        ],
        &rows,
    );
    let output = CompareOutput {
        strategies: strategies.iter().map(|s| s.name()).collect(),
        inputs,
    };
    emit(args.output.as_ref(), &to_json(&output)?)?;
    if args.output.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(())
}
