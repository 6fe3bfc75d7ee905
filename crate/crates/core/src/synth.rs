//! Synthetic token grids for tests, benchmarks and the `synth` command.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{GridDims, Position, TokenGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// i.i.d. uniform scores, random unit keys.
    Uniform,
    /// One high-score 3×3 block with near-identical keys, a scattering of
    /// mid-score tokens, low-score background.
    Clustered,
    /// Scores modulated by a fixed positional field (see [`bias_field`]).
    Biased,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Preset::Uniform),
            "clustered" => Ok(Preset::Clustered),
            "biased" => Ok(Preset::Biased),
            _ => Err(Error::validation(
                "preset",
                format!("unknown preset {s:?} (clustered, uniform, biased)"),
            )),
        }
    }
}

/// Deterministic generator for dump `index` of a corpus seeded with `seed`.
pub fn corpus_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Location of the hotspot in [`bias_field`].
pub fn bias_peak(dims: GridDims) -> Position {
    Position::new(dims.height * 5 / 6, dims.width * 3 / 4)
}

/// Positional attention bias: a gentle ramp along the raster order plus a
/// strong hotspot at [`bias_peak`]. Mean generated score equals this field.
pub fn bias_field(dims: GridDims) -> Vec<f64> {
    let n = dims.cells();
    let peak = bias_peak(dims);
    (0..n)
        .map(|k| {
            let p = Position::new(
                (k / dims.width as usize) as u32,
                (k % dims.width as usize) as u32,
            );
            let ramp = if n > 1 {
                0.5 * k as f64 / (n - 1) as f64
            } else {
                0.0
            };
            1.0 + ramp + 4.0 * (-(p.distance_sq(peak) as f64) / 2.0).exp()
        })
        .collect()
}

/// Top-left corner of the planted block in a clustered grid.
pub fn clustered_block_origin<R: Rng>(rng: &mut R, dims: GridDims) -> Position {
    Position::new(
        rng.gen_range(0..=dims.height - 3),
        rng.gen_range(0..=dims.width - 3),
    )
}

/// One single-image raster grid from `preset`.
pub fn generate<R: Rng>(
    preset: Preset,
    dims: GridDims,
    key_dim: usize,
    rng: &mut R,
) -> Result<TokenGrid<f64>> {
    if key_dim == 0 {
        return Err(Error::validation("key_dim", "must be at least 1"));
    }
    if dims.height == 0 || dims.width == 0 {
        return Err(Error::validation("grid_dims", "grid must be non-empty"));
    }
    let n = dims.cells();
    let mut keys: Vec<f64> = Vec::with_capacity(n * key_dim);
    let scores: Vec<f64> = match preset {
        Preset::Uniform => (0..n).map(|_| rng.gen::<f64>()).collect(),
        Preset::Biased => bias_field(dims)
            .iter()
            .map(|b| b * rng.gen_range(0.5..1.5))
            .collect(),
        Preset::Clustered => {
            if dims.height < 3 || dims.width < 3 {
                return Err(Error::validation(
                    "grid_dims",
                    "clustered preset needs at least a 3x3 grid",
                ));
            }
            let origin = clustered_block_origin(rng, dims);
            let base = unit_vector(rng, key_dim);
            let in_block = |k: usize| {
                let (r, c) = (
                    (k / dims.width as usize) as u32,
                    (k % dims.width as usize) as u32,
                );
                (origin.row..origin.row + 3).contains(&r)
                    && (origin.col..origin.col + 3).contains(&c)
            };
            let mut scores = Vec::with_capacity(n);
            for k in 0..n {
                if in_block(k) {
                    scores.push(rng.gen_range(0.9..1.0));
                    let jitter: Vec<f64> = base
                        .iter()
                        .map(|&b| b + 0.02 * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    let norm = jitter.iter().map(|x| x * x).sum::<f64>().sqrt();
                    keys.extend(jitter.iter().map(|x| x / norm));
                } else {
                    let mid = rng.gen_bool(0.2);
                    scores.push(if mid {
                        rng.gen_range(0.3..0.8)
                    } else {
                        rng.gen_range(0.0..0.3)
                    });
                    keys.extend(unit_vector(rng, key_dim));
                }
            }
            return TokenGrid::raster(dims.height, dims.width, scores, keys, key_dim);
        }
    };
    for _ in 0..n {
        keys.extend(unit_vector(rng, key_dim));
    }
    TokenGrid::raster(dims.height, dims.width, scores, keys, key_dim)
}

/// Irregular grid for differential testing: 1–3 sub-images of random extent,
/// randomly thinned and shuffled, with occasional zero and duplicate keys.
pub fn random_grid<R: Rng>(rng: &mut R, max_tokens: usize, max_key_dim: usize) -> TokenGrid<f64> {
    assert!(max_tokens >= 1 && max_key_dim >= 1);
    let key_dim = rng.gen_range(1..=max_key_dim);
    let n_sub = rng.gen_range(1..=3u32);
    let mut grid_dims = Vec::new();
    let mut cells: Vec<(u32, Position)> = Vec::new();
    for s in 0..n_sub {
        let dims = GridDims::new(rng.gen_range(1..=12), rng.gen_range(1..=12));
        grid_dims.push(dims);
        let density = rng.gen_range(0.5..=1.0);
        for r in 0..dims.height {
            for c in 0..dims.width {
                if rng.gen_bool(density) {
                    cells.push((s, Position::new(r, c)));
                }
            }
        }
    }
    if cells.is_empty() {
        cells.push((0, Position::new(0, 0)));
    }
    cells.shuffle(rng);
    cells.truncate(max_tokens);

    let n = cells.len();
    let mut keys: Vec<f64> = Vec::with_capacity(n * key_dim);
    for i in 0..n {
        let roll = rng.gen::<f64>();
        if roll < 0.03 {
            keys.extend(std::iter::repeat_n(0.0, key_dim));
        } else if roll < 0.15 && i > 0 {
            let j = rng.gen_range(0..i);
            let copy = keys[j * key_dim..(j + 1) * key_dim].to_vec();
            keys.extend(copy);
        } else {
            keys.extend((0..key_dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        }
    }
    let scores = (0..n).map(|_| rng.gen::<f64>()).collect();
    TokenGrid::new(
        scores,
        cells.iter().map(|&(_, p)| p).collect(),
        keys,
        key_dim,
        cells.iter().map(|&(s, _)| s).collect(),
        grid_dims,
    )
    .expect("generator respects grid invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::rank_by_score;

    #[test]
    fn clustered_top9_sit_in_the_block() {
        for seed in 0..20 {
            let mut rng = corpus_rng(seed, 0);
            let g = generate(Preset::Clustered, GridDims::new(24, 24), 16, &mut rng).unwrap();
            let top: Vec<Position> = rank_by_score(g.scores())[..9]
                .iter()
                .map(|&i| g.positions()[i])
                .collect();
            let r0 = top.iter().map(|p| p.row).min().unwrap();
            let c0 = top.iter().map(|p| p.col).min().unwrap();
            assert!(
                top.iter().all(|p| p.row < r0 + 3 && p.col < c0 + 3),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn same_stream_same_grid() {
        let a = generate(
            Preset::Biased,
            GridDims::new(6, 5),
            4,
            &mut corpus_rng(9, 3),
        )
        .unwrap();
        let b = generate(
            Preset::Biased,
            GridDims::new(6, 5),
            4,
            &mut corpus_rng(9, 3),
        )
        .unwrap();
        let c = generate(
            Preset::Biased,
            GridDims::new(6, 5),
            4,
            &mut corpus_rng(9, 4),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bias_field_peaks_at_planted_location() {
        for (h, w) in [(24u32, 24u32), (8, 8), (5, 12)] {
            let dims = GridDims::new(h, w);
            let field = bias_field(dims);
            let best = (0..field.len()).fold(0, |b, i| if field[i] > field[b] { i } else { b });
            assert_eq!(best, dims.raster_index(bias_peak(dims)));
        }
    }

    #[test]
    fn random_grids_respect_bounds() {
        let mut rng = corpus_rng(1, 0);
        for _ in 0..50 {
            let g = random_grid(&mut rng, 200, 16);
            assert!(g.n_tokens() <= 200 && g.key_dim() <= 16);
        }
    }
}
