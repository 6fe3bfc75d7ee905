use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TokenGrid;
use crate::kernels::{cosine_with_norms, norm, patch_distance};
use crate::scalar::{lit, Scalar};

/// How spread out and how redundant a retained token set is.
///
/// These are this crate's own instruments for comparing strategies, not
/// quantities with an external reference value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetainedSetMetrics<T> {
    /// Mean pairwise Euclidean patch distance among retained tokens.
    pub dispersion: T,
    /// Mean over retained tokens of the highest cosine similarity to another retained token.
    pub redundancy: T,
    /// Share of the total raw score mass held by the retained tokens.
    pub score_mass: T,
    /// Mean (row, col) of the retained tokens.
    pub position_centroid: (T, T),
}

pub fn compute_metrics<T: Scalar>(
    grid: &TokenGrid<T>,
    retained: &[usize],
) -> Result<RetainedSetMetrics<T>> {
    if retained.is_empty() {
        return Err(Error::validation(
            "retained",
            "at least one retained index is required",
        ));
    }
    let n = grid.n_tokens();
    let mut seen = vec![false; n];
    for &i in retained {
        if i >= n {
            return Err(Error::validation(
                "retained",
                format!("index {i} out of range for {n} tokens"),
            ));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::validation(
                "retained",
                format!("index {i} appears twice"),
            ));
        }
    }

    let k = retained.len();
    let norms: Vec<T> = retained.iter().map(|&i| norm(grid.key(i))).collect();
    let mut distance_sum = T::zero();
    let mut best_similarity = vec![-T::one(); k];
    for a in 0..k {
        for b in a + 1..k {
            let (i, j) = (retained[a], retained[b]);
            distance_sum = distance_sum + patch_distance(grid.positions()[i], grid.positions()[j]);
            let c = cosine_with_norms(grid.key(i), grid.key(j), norms[a], norms[b]);
            best_similarity[a] = best_similarity[a].max(c);
            best_similarity[b] = best_similarity[b].max(c);
        }
    }
    let (dispersion, redundancy) = if k == 1 {
        (T::zero(), T::zero())
    } else {
        let pairs = lit::<T>((k * (k - 1) / 2) as f64);
        let kk = lit::<T>(k as f64);
        (
            distance_sum / pairs,
            best_similarity.iter().fold(T::zero(), |acc, &c| acc + c) / kk,
        )
    };

    let total = grid.scores().iter().fold(T::zero(), |acc, &s| acc + s);
    let kept = retained
        .iter()
        .fold(T::zero(), |acc, &i| acc + grid.scores()[i]);
    // an all-zero grid has no mass to distribute; fall back to the token share
    let score_mass = if total > T::zero() {
        (kept / total).min(T::one())
    } else {
        lit::<T>(k as f64 / n as f64)
    };

    let kk = lit::<T>(k as f64);
    let (rows, cols) = retained.iter().fold((T::zero(), T::zero()), |(r, c), &i| {
        let p = grid.positions()[i];
        (r + lit(f64::from(p.row)), c + lit(f64::from(p.col)))
    });

    Ok(RetainedSetMetrics {
        dispersion,
        redundancy,
        score_mass,
        position_centroid: (rows / kk, cols / kk),
    })
}
