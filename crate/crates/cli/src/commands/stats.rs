use std::path::PathBuf;

use adaptprune::analysis::{
    render_heatmap, AttentionAggregate, ImageFormat, ImageSpec, Normalization, Palette,
};
use clap::Args;
use rayon::prelude::*;

use crate::args::{emit, load_grid, to_json};
use crate::error::{io_error, CliError};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Glob matching the dumps to aggregate.
    #[arg(long)]
    pub inputs: String,
    /// Aggregate JSON path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Heatmap of the mean scores, .ppm or .svg.
    #[arg(long)]
    pub render: Option<PathBuf>,
    /// grayscale, heat or viridis.
    #[arg(long, default_value = "viridis", value_parser = parse_palette)]
    pub palette: Palette,
    /// Pixels per patch in the heatmap.
    #[arg(long, default_value_t = 16)]
    pub cell_size: u32,
    /// Fixed colour scale MIN:MAX instead of per-image min-max.
    #[arg(long, value_parser = parse_range)]
    pub range: Option<(f64, f64)>,
}

fn parse_palette(s: &str) -> Result<Palette, String> {
    s.parse().map_err(|e: adaptprune::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected MIN:MAX, got {s:?}"))?;
    match (lo.trim().parse::<f64>(), hi.trim().parse::<f64>()) {
        (Ok(lo), Ok(hi)) if lo.is_finite() && hi.is_finite() && lo < hi => Ok((lo, hi)),
        _ => Err(format!("expected finite MIN:MAX with MIN < MAX, got {s:?}")),
    }
}

pub fn run(args: StatsArgs) -> Result<(), CliError> {
    let image_format = match &args.render {
        Some(p) => Some(ImageFormat::from_extension(p).ok_or_else(|| {
            CliError::usage(format!("{}: heatmap must end in .ppm or .svg", p.display()))
        })?),
        None => None,
    };
    let mut paths: Vec<PathBuf> = glob::glob(&args.inputs)
        .map_err(|e| CliError::usage(format!("bad glob {:?}: {e}", args.inputs)))?
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(e.to_string()))?;
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::usage(format!("no dumps match {:?}", args.inputs)));
    }

    // decode in parallel, accumulate in path order so the output is reproducible
    let grids = paths
        .par_iter()
        .map(|p| load_grid(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut agg = AttentionAggregate::new(grids[0].grid_dims()[0]);
    for (grid, path) in grids.iter().zip(&paths) {
        agg.add(grid)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    }

    if let (Some(path), Some(format)) = (&args.render, image_format) {
        let spec = ImageSpec {
            format,
            cell_size: args.cell_size,
            normalization: match args.range {
                Some((min, max)) => Normalization::Fixed { min, max },
                None => Normalization::PerImage,
            },
        };
        let dims = agg.grid_dims;
        let bytes = render_heatmap(
            &agg.mean_scores,
            dims.height as usize,
            dims.width as usize,
            args.palette,
            spec,
        )?;
        std::fs::write(path, bytes).map_err(|e| io_error(path, e))?;
    }
    emit(args.output.as_ref(), &to_json(&agg)?)
}
