//! Alternative selection rules used as comparison baselines.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{PruneConfig, Strategy};
use crate::error::{Error, Result};
use crate::grid::TokenGrid;
use crate::kernels::gaussian_correction;
use crate::scalar::{lit, Scalar};
use crate::select::PruneResult;

/// Indices ordered by descending score, ties by ascending index.
pub fn rank_by_score<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn top_n<T: Scalar>(scores: &[T], n: usize) -> Vec<usize> {
    let mut order = rank_by_score(scores);
    order.truncate(n);
    order
}

/// Runs any non-adaptive strategy.
pub fn baseline_select<T: Scalar>(
    grid: &TokenGrid<T>,
    config: &PruneConfig,
) -> Result<PruneResult<T>> {
    config.validate()?;
    let n = config.keep_count(grid.n_tokens());
    let seeded_rng = || ChaCha8Rng::seed_from_u64(config.seed.expect("seed checked by validate"));
    let (retained, final_scores) = match config.strategy {
        Strategy::AdaptPrune => {
            return Err(Error::validation(
                "strategy",
                "adaptprune is not a baseline; call adaptprune_select",
            ))
        }
        Strategy::FastvTopk => {
            let scores = if config.correction_enabled() {
                gaussian_correction(grid, config.gaussian_sigma)?
            } else {
                grid.scores().to_vec()
            };
            (top_n(&scores, n), scores)
        }
        Strategy::Skip => (skip_ranks(grid.scores(), n), grid.scores().to_vec()),
        Strategy::Random => {
            let picked = sample(&mut seeded_rng(), grid.n_tokens(), n).into_vec();
            (picked, grid.scores().to_vec())
        }
        Strategy::Random3x3 => {
            let mut rng = seeded_rng();
            let picks = cell_picks(grid, |cell| cell[rng.gen_range(0..cell.len())]);
            (
                fill_from_picks(grid.scores(), &picks, n),
                grid.scores().to_vec(),
            )
        }
        Strategy::Maxpool3x3 => {
            let scores = grid.scores();
            let picks = cell_picks(grid, |cell| {
                // cell members ascend, so the first maximum is the lowest index
                cell.iter().copied().fold(
                    cell[0],
                    |best, i| if scores[i] > scores[best] { i } else { best },
                )
            });
            (fill_from_picks(scores, &picks, n), scores.to_vec())
        }
        Strategy::Avgpool3x3 => {
            let pooled = average_pool_3x3(grid);
            (top_n(&pooled, n), pooled)
        }
        Strategy::FitpruneSingle => {
            let ext = grid.extended().ok_or_else(|| {
                Error::validation(
                    "extended",
                    "fitprune_single needs cross/self attention scores (dump flag bit 0)",
                )
            })?;
            let scores: Vec<T> = ext
                .cross_attention
                .iter()
                .zip(&ext.self_attention)
                .map(|(&c, &s)| c * s)
                .collect();
            (top_n(&scores, n), scores)
        }
        Strategy::LastFraction => {
            let total = grid.n_tokens();
            ((total - n..total).collect(), grid.scores().to_vec())
        }
    };
    Ok(PruneResult {
        retained,
        final_scores,
        trace: None,
    })
}

/// Every other rank from the top `2n`; if that runs short (keep > 0.5) the
/// skipped ranks fill the remainder in rank order.
fn skip_ranks<T: Scalar>(scores: &[T], n: usize) -> Vec<usize> {
    let order = rank_by_score(scores);
    let window = &order[..(2 * n).min(order.len())];
    let mut out: Vec<usize> = window.iter().step_by(2).copied().take(n).collect();
    if out.len() < n {
        let missing = n - out.len();
        out.extend(order.iter().skip(1).step_by(2).take(missing));
    }
    out
}

/// Tokens grouped into 3×3 patch cells, per sub-image, cells in row-major order.
pub(crate) fn cells_3x3<T: Scalar>(grid: &TokenGrid<T>) -> Vec<Vec<usize>> {
    let mut cells = Vec::new();
    for (sub, dims) in grid.grid_dims().iter().enumerate() {
        let cell_cols = dims.width.div_ceil(3) as usize;
        let cell_rows = dims.height.div_ceil(3) as usize;
        let offset = cells.len();
        cells.resize(offset + cell_rows * cell_cols, Vec::new());
        for (i, (&s, p)) in grid.subimage_ids().iter().zip(grid.positions()).enumerate() {
            if s as usize == sub {
                cells[offset + (p.row / 3) as usize * cell_cols + (p.col / 3) as usize].push(i);
            }
        }
    }
    cells.retain(|c| !c.is_empty());
    cells
}

fn cell_picks<T: Scalar>(
    grid: &TokenGrid<T>,
    mut pick: impl FnMut(&[usize]) -> usize,
) -> Vec<usize> {
    cells_3x3(grid).iter().map(|cell| pick(cell)).collect()
}

/// Top-`n` of `picks` by score, topped up from the best unpicked tokens.
fn fill_from_picks<T: Scalar>(scores: &[T], picks: &[usize], n: usize) -> Vec<usize> {
    let pick_scores: Vec<T> = picks.iter().map(|&i| scores[i]).collect();
    let mut out: Vec<usize> = top_n(&pick_scores, n)
        .into_iter()
        .map(|k| picks[k])
        .collect();
    if out.len() < n {
        let mut taken = vec![false; scores.len()];
        picks.iter().for_each(|&i| taken[i] = true);
        let missing = n - out.len();
        out.extend(
            rank_by_score(scores)
                .into_iter()
                .filter(|&i| !taken[i])
                .take(missing),
        );
    }
    out
}

/// Stride-1, kernel-3 mean pooling over each sub-image. Edge windows average
/// over the tokens actually present.
pub fn average_pool_3x3<T: Scalar>(grid: &TokenGrid<T>) -> Vec<T> {
    let scores = grid.scores();
    let mut tables: Vec<Vec<Option<usize>>> = grid
        .grid_dims()
        .iter()
        .map(|d| vec![None; d.cells()])
        .collect();
    for (i, (&s, &p)) in grid.subimage_ids().iter().zip(grid.positions()).enumerate() {
        let dims = grid.grid_dims()[s as usize];
        tables[s as usize][dims.raster_index(p)] = Some(i);
    }
    (0..grid.n_tokens())
        .map(|i| {
            let s = grid.subimage_ids()[i] as usize;
            let dims = grid.grid_dims()[s];
            let p = grid.positions()[i];
            let (mut sum, mut count) = (T::zero(), 0u32);
            for row in p.row.saturating_sub(1)..=(p.row + 1).min(dims.height - 1) {
                for col in p.col.saturating_sub(1)..=(p.col + 1).min(dims.width - 1) {
                    if let Some(j) = tables[s][row as usize * dims.width as usize + col as usize] {
                        sum = sum + scores[j];
                        count += 1;
                    }
                }
            }
            sum / lit::<T>(f64::from(count))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ExtendedScores;

    fn line(scores: Vec<f64>) -> TokenGrid<f64> {
        let n = scores.len() as u32;
        TokenGrid::raster(1, n, scores, vec![1.0; n as usize], 1).unwrap()
    }

    fn run(grid: &TokenGrid<f64>, strategy: Strategy, keep: f64) -> Vec<usize> {
        let cfg = PruneConfig {
            seed: Some(3),
            gaussian_enabled: false,
            ..PruneConfig::default()
                .with_strategy(strategy)
                .with_keep(keep)
        };
        baseline_select(grid, &cfg).unwrap().retained
    }

    #[test]
    fn last_fraction_takes_the_tail() {
        assert_eq!(
            run(&line(vec![1.0; 10]), Strategy::LastFraction, 0.2),
            vec![8, 9]
        );
    }

    #[test]
    fn fastv_is_argmax_for_one() {
        assert_eq!(
            run(&line(vec![0.1, 0.9, 0.5]), Strategy::FastvTopk, 1.0 / 3.0),
            vec![1]
        );
    }

    #[test]
    fn fastv_ties_prefer_low_index() {
        assert_eq!(
            run(&line(vec![0.5, 0.9, 0.5, 0.9]), Strategy::FastvTopk, 0.75),
            vec![1, 3, 0]
        );
    }

    #[test]
    fn fastv_with_correction_prefers_the_centre() {
        let g = line(vec![1.0, 0.9, 1.0]);
        let cfg = PruneConfig::default()
            .with_strategy(Strategy::FastvTopk)
            .with_keep(1.0 / 3.0);
        assert_eq!(baseline_select(&g, &cfg).unwrap().retained, vec![1]);
    }

    #[test]
    fn skip_takes_even_ranks() {
        let g = line(vec![0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0]);
        assert_eq!(run(&g, Strategy::Skip, 0.2), vec![0, 2]);
        // keep > 0.5: even ranks run out, odd ranks fill in rank order
        assert_eq!(run(&g, Strategy::Skip, 0.7), vec![0, 2, 4, 6, 8, 1, 3]);
    }

    #[test]
    fn random_is_seed_deterministic_and_distinct() {
        let g = line((0..50).map(f64::from).collect());
        let a = run(&g, Strategy::Random, 0.2);
        assert_eq!(a, run(&g, Strategy::Random, 0.2));
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
        let missing_seed = PruneConfig::default().with_strategy(Strategy::Random);
        assert!(baseline_select(&g, &missing_seed).is_err());
    }

    #[test]
    fn maxpool_picks_cell_maxima() {
        // 3x6 raster: two cells; maxima at index 13 (cell 0) and 17 (cell 1)
        let mut scores = vec![0.0f64; 18];
        scores[13] = 0.5;
        scores[17] = 0.9;
        scores[4] = 0.7;
        scores[5] = 0.6;
        let g = TokenGrid::raster(3, 6, scores, vec![1.0; 18], 1).unwrap();
        let cfg = PruneConfig::default()
            .with_strategy(Strategy::Maxpool3x3)
            .with_keep(2.0 / 18.0);
        let cells = cells_3x3(&g);
        assert_eq!(cells.len(), 2);
        assert_eq!(baseline_select(&g, &cfg).unwrap().retained, vec![17, 13]);
        // more slots than cells: top up with best unpicked tokens
        let cfg = cfg.with_keep(4.0 / 18.0);
        assert_eq!(
            baseline_select(&g, &cfg).unwrap().retained,
            vec![17, 13, 4, 5]
        );
    }

    #[test]
    fn random_3x3_picks_one_per_cell() {
        let g =
            TokenGrid::raster(6, 6, (0..36).map(f64::from).collect(), vec![1.0; 36], 1).unwrap();
        let picked = run(&g, Strategy::Random3x3, 4.0 / 36.0);
        let cells = cells_3x3(&g);
        for cell in &cells {
            assert_eq!(picked.iter().filter(|i| cell.contains(i)).count(), 1);
        }
    }

    #[test]
    fn avgpool_edges_shrink() {
        let g = TokenGrid::raster(2, 2, vec![4.0f64, 0.0, 0.0, 0.0], vec![1.0; 4], 1).unwrap();
        assert_eq!(average_pool_3x3(&g), vec![1.0; 4]);
        let g = line(vec![3.0, 0.0, 0.0, 6.0]);
        assert_eq!(average_pool_3x3(&g), vec![1.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn fitprune_needs_extended_scores() {
        let g = line(vec![1.0, 1.0, 1.0]);
        let cfg = PruneConfig::default()
            .with_strategy(Strategy::FitpruneSingle)
            .with_keep(0.34);
        assert!(matches!(
            baseline_select(&g, &cfg),
            Err(Error::Validation {
                field: "extended",
                ..
            })
        ));
        let g = g
            .with_extended(ExtendedScores {
                cross_attention: vec![0.9, 0.5, 0.4],
                self_attention: vec![0.1, 0.5, 0.6],
            })
            .unwrap();
        assert_eq!(baseline_select(&g, &cfg).unwrap().retained, vec![1]);
    }
}
