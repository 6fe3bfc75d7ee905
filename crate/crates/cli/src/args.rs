use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adaptprune::io::{read_dump, DumpFormat};
use adaptprune::{GaussianSigma, PruneConfig, Strategy, TokenGrid};
use clap::Args;

use crate::error::{io_error, CliError};

/// Engine knobs shared by every command that runs a selection.
#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    /// Fraction of tokens retained, in (0, 1].
    #[arg(long, default_value_t = 0.1)]
    pub keep: f64,
    /// Spatial decay width in patches.
    #[arg(long, default_value_t = 2.0)]
    pub sigma_d: f64,
    /// Similarity decay width.
    #[arg(long, default_value_t = 0.5)]
    pub sigma_s: f64,
    /// Gaussian correction width in patches, or "auto" for max(H, W) / 3.
    #[arg(long, default_value = "auto", value_parser = parse_gaussian_sigma)]
    pub gaussian_sigma: GaussianSigma,
    /// Rank raw scores (disables the centre correction).
    #[arg(long)]
    pub no_gaussian: bool,
    /// Suppress on spatial distance alone.
    #[arg(long)]
    pub no_similarity: bool,
}

impl TuningArgs {
    pub fn config(&self, strategy: Strategy, seed: Option<u64>) -> PruneConfig {
        PruneConfig {
            sigma_d: self.sigma_d,
            sigma_s: self.sigma_s,
            keep_fraction: self.keep,
            gaussian_sigma: self.gaussian_sigma,
            gaussian_enabled: !self.no_gaussian,
            similarity_enabled: !self.no_similarity,
            strategy,
            seed,
            ..PruneConfig::default()
        }
    }
}

fn parse_gaussian_sigma(s: &str) -> Result<GaussianSigma, String> {
    s.parse().map_err(|e: adaptprune::Error| e.to_string())
}

pub fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: adaptprune::Error| e.to_string())
}

pub fn load_grid(path: &Path) -> Result<TokenGrid, CliError> {
    if !path.is_file() {
        return Err(CliError::usage(format!("{}: no such file", path.display())));
    }
    read_dump(path, DumpFormat::from_path(path)).map_err(|e| match e {
        adaptprune::Error::Io(io) => io_error(path, io),
        other => CliError::usage(format!("{}: {other}", path.display())),
    })
}

/// Writes `bytes` to `path`, or to standard output when no path is given.
pub fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_error(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::internal(e.to_string()))
        }
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
