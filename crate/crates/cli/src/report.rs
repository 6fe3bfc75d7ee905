use std::time::Instant;

use adaptprune::analysis::compute_metrics;
use adaptprune::{prune, PruneConfig, RetainedSetMetrics, TokenGrid, TraceStep};
use serde::Serialize;

use crate::error::CliError;

/// Effective parameters of a run, defaults resolved.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub config: PruneConfig,
    pub keep_count: usize,
    /// Whether the centre correction was applied for this strategy.
    pub correction_applied: bool,
    /// Correction width per sub-image; empty when no correction was applied.
    pub resolved_gaussian_sigmas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub strategy: String,
    pub n_tokens: usize,
    pub config: ConfigEcho,
    pub retained: Vec<usize>,
    pub metrics: RetainedSetMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
    /// Working scores when the loop stopped; reported together with the trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_scores: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

pub fn run_report(
    grid: &TokenGrid,
    config: &PruneConfig,
    timing: bool,
) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let result = prune(grid, config)?;
    let elapsed = start.elapsed();
    let metrics = compute_metrics(grid, &result.retained)?;
    let correction_applied = config.correction_enabled();
    let resolved_gaussian_sigmas = if correction_applied {
        grid.grid_dims()
            .iter()
            .map(|d| config.gaussian_sigma.resolve(d.height, d.width))
            .collect()
    } else {
        Vec::new()
    };
    Ok(RunReport {
        strategy: config.strategy.name().to_string(),
        n_tokens: grid.n_tokens(),
        config: ConfigEcho {
            config: config.clone(),
            keep_count: config.keep_count(grid.n_tokens()),
            correction_applied,
            resolved_gaussian_sigmas,
        },
        retained: result.retained,
        metrics,
        final_scores: config.trace.then_some(result.final_scores),
        trace: result.trace,
        wall_time_ms: timing.then_some(elapsed.as_secs_f64() * 1e3),
    })
}

/// Left-aligns the first column and right-aligns the rest.
pub fn aligned_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
