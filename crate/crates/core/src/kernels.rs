//! Scoring primitives: distribution correction, decay functions and key similarity.

use crate::config::GaussianSigma;
use crate::error::{Error, Result};
use crate::grid::{GridDims, Position, TokenGrid};
use crate::scalar::{lit, Scalar};

/// Slack allowed on cosine inputs before they are treated as out of range.
pub const COSINE_SLACK: f64 = 1e-6;

/// Spatial suppression weight `exp(-d² / (2 σ_d²))`.
#[inline]
pub fn spatial_decay<T: Scalar>(distance: T, sigma_d: T) -> T {
    let two = lit::<T>(2.0);
    (-(distance * distance) / (two * sigma_d * sigma_d)).exp()
}

/// Similarity suppression weight `exp(-(1 - cos)² / (2 σ_s²))`.
///
/// Inputs overshooting `[-1, 1]` by at most [`COSINE_SLACK`] are clamped.
pub fn similarity_decay<T: Scalar>(cos_sim: T, sigma_s: T) -> Result<T> {
    let slack = lit::<T>(COSINE_SLACK);
    let one = T::one();
    if !(cos_sim >= -one - slack && cos_sim <= one + slack) {
        return Err(Error::validation(
            "cos_sim",
            format!("{cos_sim} lies outside [-1, 1]"),
        ));
    }
    Ok(similarity_decay_clamped(
        cos_sim.max(-one).min(one),
        sigma_s,
    ))
}

#[inline]
pub(crate) fn similarity_decay_clamped<T: Scalar>(cos_sim: T, sigma_s: T) -> T {
    let gap = T::one() - cos_sim;
    (-(gap * gap) / (lit::<T>(2.0) * sigma_s * sigma_s)).exp()
}

/// Cosine similarity of two key vectors. Zero-norm vectors have similarity 0.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::validation(
            "keys",
            format!("dimension mismatch: {} vs {}", a.len(), b.len()),
        ));
    }
    Ok(cosine_with_norms(a, b, norm(a), norm(b)))
}

#[inline]
pub(crate) fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

#[inline]
pub(crate) fn cosine_with_norms<T: Scalar>(a: &[T], b: &[T], norm_a: T, norm_b: T) -> T {
    if norm_a == T::zero() || norm_b == T::zero() {
        return T::zero();
    }
    let dot = a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    (dot / (norm_a * norm_b)).max(-T::one()).min(T::one())
}

/// Euclidean patch distance.
#[inline]
pub fn patch_distance<T: Scalar>(a: Position, b: Position) -> T {
    lit::<T>(a.distance_sq(b) as f64).sqrt()
}

/// Value of a Gaussian mask centred at `((H-1)/2, (W-1)/2)`.
pub fn gaussian_mask<T: Scalar>(p: Position, dims: GridDims, sigma: T) -> T {
    let two = lit::<T>(2.0);
    let cr = lit::<T>(f64::from(dims.height) - 1.0) / two;
    let cc = lit::<T>(f64::from(dims.width) - 1.0) / two;
    let dr = lit::<T>(f64::from(p.row)) - cr;
    let dc = lit::<T>(f64::from(p.col)) - cc;
    (-(dr * dr + dc * dc) / (two * sigma * sigma)).exp()
}

/// Multiplies each score by the centre-peaked Gaussian mask of its own sub-image.
pub fn gaussian_correction<T: Scalar>(grid: &TokenGrid<T>, sigma: GaussianSigma) -> Result<Vec<T>> {
    if let GaussianSigma::Fixed(s) = sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::validation(
                "gaussian_sigma",
                format!("must be positive, got {s}"),
            ));
        }
    }
    let sigmas: Vec<T> = grid
        .grid_dims()
        .iter()
        .map(|d| lit::<T>(sigma.resolve(d.height, d.width)))
        .collect();
    Ok(grid
        .scores()
        .iter()
        .zip(grid.positions())
        .zip(grid.subimage_ids())
        .map(|((&s, &p), &sub)| {
            let k = sub as usize;
            s * gaussian_mask(p, grid.grid_dims()[k], sigmas[k])
        })
        .collect())
}
