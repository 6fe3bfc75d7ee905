//! Brute-force reference for the adaptive NMS loop, used for differential
//! testing. Deliberately naive: full rescans, no radius, no caching.

use serde::Serialize;

use crate::config::PruneConfig;
use crate::error::Result;
use crate::grid::TokenGrid;
use crate::scalar::{lit, Scalar};
use crate::select::{adaptprune_select_relaxed, PruneResult};

/// Reference selection. Every unselected token of the winner's sub-image is
/// suppressed, however far away. `cutoff_multiplier` is ignored.
#[allow(clippy::needless_range_loop)]
pub fn reference_select<T: Scalar>(
    grid: &TokenGrid<T>,
    config: &PruneConfig,
) -> Result<PruneResult<T>> {
    config.validate_common()?;
    let n_tokens = grid.n_tokens();
    let target = config.keep_count(n_tokens);
    let two = lit::<T>(2.0);
    let sigma_d = lit::<T>(config.sigma_d);
    let sigma_s = lit::<T>(config.sigma_s);

    let mut s: Vec<T> = grid.scores().to_vec();
    if config.correction_enabled() {
        for t in 0..n_tokens {
            let dims = grid.dims_of(t);
            let sigma_g = lit::<T>(config.gaussian_sigma.resolve(dims.height, dims.width));
            let mid_r = lit::<T>(f64::from(dims.height) - 1.0) / two;
            let mid_c = lit::<T>(f64::from(dims.width) - 1.0) / two;
            let pos = grid.positions()[t];
            let off_r = lit::<T>(f64::from(pos.row)) - mid_r;
            let off_c = lit::<T>(f64::from(pos.col)) - mid_c;
            s[t] = s[t] * (-(off_r * off_r + off_c * off_c) / (two * sigma_g * sigma_g)).exp();
        }
    }

    let mut r: Vec<usize> = Vec::new();
    while r.len() < target {
        let mut best: Option<usize> = None;
        for k in 0..n_tokens {
            if r.contains(&k) {
                continue;
            }
            if best.is_none_or(|b| s[k] > s[b]) {
                best = Some(k);
            }
        }
        let Some(i) = best else { break };
        r.push(i);

        for j in 0..n_tokens {
            if r.contains(&j) || grid.subimage_ids()[j] != grid.subimage_ids()[i] {
                continue;
            }
            let (pi, pj) = (grid.positions()[i], grid.positions()[j]);
            let dr = f64::from(pi.row) - f64::from(pj.row);
            let dc = f64::from(pi.col) - f64::from(pj.col);
            let d = lit::<T>(dr * dr + dc * dc).sqrt();
            let d_spatial = (-(d * d) / (two * sigma_d * sigma_d)).exp();
            let d_similarity = if config.similarity_enabled {
                let sim = cosine(grid.key(i), grid.key(j));
                let gap = T::one() - sim;
                (-(gap * gap) / (two * sigma_s * sigma_s)).exp()
            } else {
                T::one()
            };
            s[j] = s[j] * (T::one() - d_spatial * d_similarity);
        }
    }
    Ok(PruneResult {
        retained: r,
        final_scores: s,
        trace: None,
    })
}

fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut aa = T::zero();
    for &x in a {
        aa = aa + x * x;
    }
    let mut bb = T::zero();
    for &y in b {
        bb = bb + y * y;
    }
    if aa == T::zero() || bb == T::zero() {
        return T::zero();
    }
    let mut ab = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        ab = ab + x * y;
    }
    let c = ab / (aa.sqrt() * bb.sqrt());
    if c > T::one() {
        T::one()
    } else if c < -T::one() {
        -T::one()
    } else {
        c
    }
}

/// Divergence between the radius-limited engine and the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffReport {
    pub keep_count: usize,
    /// Retained indices of the engine that the reference did not retain.
    pub differing_indices: usize,
    /// Position of the first disagreement in the selection sequences, if any.
    pub first_divergence: Option<usize>,
    /// Largest relative difference between final scores.
    pub max_relative_score_diff: f64,
}

impl CutoffReport {
    pub fn sequences_match(&self) -> bool {
        self.first_divergence.is_none()
    }
}

/// Runs the engine with `config` as given (cutoff included) against the
/// reference and reports how far they drift apart.
pub fn cutoff_discrepancy<T: Scalar>(
    grid: &TokenGrid<T>,
    config: &PruneConfig,
) -> Result<CutoffReport> {
    let engine = adaptprune_select_relaxed(grid, config)?;
    let reference = reference_select(grid, config)?;
    Ok(compare_results(&engine, &reference))
}

pub(crate) fn compare_results<T: Scalar>(
    engine: &PruneResult<T>,
    reference: &PruneResult<T>,
) -> CutoffReport {
    let mut in_reference = vec![false; reference.final_scores.len()];
    reference
        .retained
        .iter()
        .for_each(|&i| in_reference[i] = true);
    let differing_indices = engine
        .retained
        .iter()
        .filter(|&&i| !in_reference[i])
        .count();
    let first_divergence = engine
        .retained
        .iter()
        .zip(&reference.retained)
        .position(|(a, b)| a != b)
        .or_else(|| (engine.retained.len() != reference.retained.len()).then_some(0));
    let max_relative_score_diff = engine
        .final_scores
        .iter()
        .zip(&reference.final_scores)
        .map(|(a, b)| relative_diff(a.to_f64_lossless(), b.to_f64_lossless()))
        .fold(0.0, f64::max);
    CutoffReport {
        keep_count: reference.retained.len(),
        differing_indices,
        first_divergence,
        max_relative_score_diff,
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn line_config(keep: f64) -> PruneConfig {
        PruneConfig {
            sigma_d: 1.0,
            sigma_s: 0.5,
            keep_fraction: keep,
            gaussian_enabled: false,
            cutoff_multiplier: None,
            ..PruneConfig::default()
        }
    }

    #[test]
    fn hand_cases() {
        let same = TokenGrid::raster(1, 3, vec![1.0f64, 0.9, 0.8], vec![1.0; 3], 1).unwrap();
        let r = reference_select(&same, &line_config(0.667)).unwrap();
        assert_eq!(r.retained, vec![0, 2]);
        assert_relative_eq!(r.final_scores[2], 0.6917317734107099, max_relative = 1e-9);

        let keys = vec![1.0f64, 0.0, 0.0, 1.0, 1.0, 0.0];
        let ortho = TokenGrid::raster(1, 3, vec![1.0, 0.9, 0.8], keys, 2).unwrap();
        let r = reference_select(&ortho, &line_config(0.667)).unwrap();
        assert_eq!(r.retained, vec![0, 1]);
        assert_relative_eq!(r.final_scores[1], 0.8261235012384911, max_relative = 1e-9);
    }

    #[test]
    fn keep_all_retains_everything() {
        let g = TokenGrid::raster(3, 3, (0..9).map(f64::from).collect(), vec![1.0; 9], 1).unwrap();
        let mut r = reference_select(&g, &line_config(1.0)).unwrap().retained;
        r.sort_unstable();
        assert_eq!(r, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn vanishing_sigma_has_no_discrepancy() {
        let g = TokenGrid::raster(
            4,
            4,
            (0..16).map(|i| f64::from(i % 5)).collect(),
            vec![1.0; 16],
            1,
        )
        .unwrap();
        let cfg = PruneConfig {
            sigma_d: 1e-9,
            cutoff_multiplier: Some(3.0),
            ..line_config(0.5)
        };
        let report = cutoff_discrepancy(&g, &cfg).unwrap();
        assert_eq!(report.differing_indices, 0);
        assert!(report.sequences_match());
    }

    #[test]
    fn relative_diff_conventions() {
        assert_eq!(relative_diff(0.0, 0.0), 0.0);
        assert_eq!(relative_diff(1.0, 0.5), 0.5);
    }
}
