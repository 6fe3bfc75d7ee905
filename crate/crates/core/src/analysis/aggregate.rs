use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDims, TokenGrid};
use crate::scalar::Scalar;

/// Per-position running mean of attention over many dumps of the same layout.
///
/// Each dump must be a single sub-image that covers every cell of the grid
/// exactly once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionAggregate {
    pub grid_dims: GridDims,
    pub mean_scores: Vec<f64>,
    pub sample_count: u64,
    /// Sum of squared deviations per position (Welford).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m2: Vec<f64>,
}

impl AttentionAggregate {
    pub fn new(grid_dims: GridDims) -> Self {
        Self {
            grid_dims,
            mean_scores: vec![0.0; grid_dims.cells()],
            sample_count: 0,
            m2: vec![0.0; grid_dims.cells()],
        }
    }

    pub fn add<T: Scalar>(&mut self, grid: &TokenGrid<T>) -> Result<()> {
        let field = self.raster_scores(grid)?;
        self.sample_count += 1;
        let k = self.sample_count as f64;
        for ((mean, m2), x) in self
            .mean_scores
            .iter_mut()
            .zip(self.m2.iter_mut())
            .zip(field)
        {
            let delta = x - *mean;
            *mean += delta / k;
            *m2 += delta * (x - *mean);
        }
        Ok(())
    }

    /// Combines two partial aggregates (parallel reduction).
    pub fn merge(&mut self, other: &AttentionAggregate) -> Result<()> {
        if other.grid_dims != self.grid_dims {
            return Err(dims_mismatch(self.grid_dims, other.grid_dims));
        }
        if other.sample_count == 0 {
            return Ok(());
        }
        let (na, nb) = (self.sample_count as f64, other.sample_count as f64);
        let total = na + nb;
        for c in 0..self.mean_scores.len() {
            let delta = other.mean_scores[c] - self.mean_scores[c];
            self.mean_scores[c] += delta * nb / total;
            self.m2[c] += other.m2[c] + delta * delta * na * nb / total;
        }
        self.sample_count += other.sample_count;
        Ok(())
    }

    /// Sample variance per position; zeros until two samples are in.
    pub fn variance(&self) -> Vec<f64> {
        let denom = self.sample_count.saturating_sub(1) as f64;
        self.m2
            .iter()
            .map(|&m| if denom > 0.0 { m / denom } else { 0.0 })
            .collect()
    }

    /// Standard error of each per-position mean.
    pub fn standard_error(&self) -> Vec<f64> {
        let k = self.sample_count as f64;
        self.variance()
            .into_iter()
            .map(|v| (v / k).sqrt())
            .collect()
    }

    /// Row-major index of the highest mean (lowest index on ties).
    pub fn argmax(&self) -> usize {
        (0..self.mean_scores.len()).fold(0, |b, i| {
            if self.mean_scores[i] > self.mean_scores[b] {
                i
            } else {
                b
            }
        })
    }

    fn raster_scores<T: Scalar>(&self, grid: &TokenGrid<T>) -> Result<Vec<f64>> {
        if grid.n_subimages() != 1 {
            return Err(Error::validation(
                "grid_dims",
                format!(
                    "aggregation needs single-image dumps, got {} sub-images",
                    grid.n_subimages()
                ),
            ));
        }
        let dims = grid.grid_dims()[0];
        if dims != self.grid_dims {
            return Err(dims_mismatch(self.grid_dims, dims));
        }
        if grid.n_tokens() != dims.cells() {
            return Err(Error::validation(
                "positions",
                format!(
                    "dump covers {} of {} grid cells",
                    grid.n_tokens(),
                    dims.cells()
                ),
            ));
        }
        let mut field = vec![0.0; dims.cells()];
        for (&p, s) in grid.positions().iter().zip(grid.scores()) {
            field[dims.raster_index(p)] = s.to_f64_lossless();
        }
        Ok(field)
    }
}

fn dims_mismatch(expected: GridDims, found: GridDims) -> Error {
    Error::validation(
        "grid_dims",
        format!(
            "dump is {}x{} but the aggregate is {}x{}",
            found.height, found.width, expected.height, expected.width
        ),
    )
}

/// Streams every dump into one aggregate.
pub fn aggregate_attention<'a, T: Scalar + 'a>(
    dumps: impl IntoIterator<Item = &'a TokenGrid<T>>,
) -> Result<AttentionAggregate> {
    let mut iter = dumps.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::validation("dumps", "no dumps to aggregate"))?;
    let dims = first.grid_dims()[0];
    let mut agg = AttentionAggregate::new(dims);
    agg.add(first)?;
    for g in iter {
        agg.add(g)?;
    }
    Ok(agg)
}
