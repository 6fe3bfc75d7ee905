use std::fs;
use std::path::PathBuf;

use adaptprune::io::{encode, DumpFormat};
use adaptprune::synth::{corpus_rng, generate, Preset};
use adaptprune::GridDims;
use clap::Args;

use crate::error::{io_error, CliError};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// clustered, uniform or biased.
    #[arg(long, value_parser = parse_preset)]
    pub preset: Preset,
    /// Grid extent as HxW.
    #[arg(long, default_value = "24x24", value_parser = parse_dims)]
    pub grid: GridDims,
    #[arg(long, default_value_t = 16)]
    pub key_dim: usize,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub outdir: PathBuf,
    /// binary or json.
    #[arg(long, default_value = "binary", value_parser = parse_format)]
    pub format: DumpFormat,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: adaptprune::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<DumpFormat, String> {
    s.parse().map_err(|e: adaptprune::Error| e.to_string())
}

fn parse_dims(s: &str) -> Result<GridDims, String> {
    let (h, w) = s
        .to_ascii_lowercase()
        .split_once('x')
        .map(|(h, w)| (h.trim().parse::<u32>(), w.trim().parse::<u32>()))
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    match (h, w) {
        (Ok(h), Ok(w)) if h > 0 && w > 0 => Ok(GridDims::new(h, w)),
        _ => Err(format!("expected positive HxW, got {s:?}")),
    }
}

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.outdir).map_err(|e| io_error(&args.outdir, e))?;
    let name = match args.preset {
        Preset::Uniform => "uniform",
        Preset::Clustered => "clustered",
        Preset::Biased => "biased",
    };
    let ext = match args.format {
        DumpFormat::Binary => "atpk",
        DumpFormat::Json => "json",
    };
    let width = args.count.saturating_sub(1).to_string().len().max(4);
    for i in 0..args.count {
        let grid = generate(
            args.preset,
            args.grid,
            args.key_dim,
            &mut corpus_rng(args.seed, i),
        )?;
        let path = args.outdir.join(format!("{name}_{i:0width$}.{ext}"));
        fs::write(&path, encode(&grid, args.format)?).map_err(|e| io_error(&path, e))?;
    }
    println!(
        "wrote {} {name} dumps to {}",
        args.count,
        args.outdir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_dims("24x12").unwrap(), GridDims::new(24, 12));
        assert_eq!(parse_dims("3X3").unwrap(), GridDims::new(3, 3));
        assert!(parse_dims("0x3").is_err());
        assert!(parse_dims("24").is_err());
    }
}
