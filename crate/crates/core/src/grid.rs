//! Visual tokens of one image (possibly tiled into sub-images).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Patch coordinate of a token inside its sub-image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub row: u32,
    pub col: u32,
}

impl Position {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    /// Squared Euclidean distance in patch units. Exact in integers.
    pub fn distance_sq(self, other: Position) -> u64 {
        let dr = i64::from(self.row) - i64::from(other.row);
        let dc = i64::from(self.col) - i64::from(other.col);
        (dr * dr + dc * dc) as u64
    }
}

/// Height and width of a sub-image, in patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub height: u32,
    pub width: u32,
}

impl GridDims {
    pub const fn new(height: u32, width: u32) -> Self {
        Self { height, width }
    }

    pub fn cells(self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn contains(self, p: Position) -> bool {
        p.row < self.height && p.col < self.width
    }

    /// Row-major cell index of `p`. Caller guarantees `contains(p)`.
    pub fn raster_index(self, p: Position) -> usize {
        p.row as usize * self.width as usize + p.col as usize
    }
}

/// Extra per-token scores needed by the single-layer FitPrune baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedScores<T> {
    /// Cross attention from text tokens to each image token.
    pub cross_attention: Vec<T>,
    /// Self-attention mass each image token receives from other image tokens.
    pub self_attention: Vec<T>,
}

/// One image's visual tokens: attention scores, patch positions, key vectors
/// and sub-image membership.
///
/// Construction validates every invariant, so any `TokenGrid` in hand is
/// well-formed.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid<T> {
    scores: Vec<T>,
    positions: Vec<Position>,
    keys: Vec<T>,
    key_dim: usize,
    subimage_ids: Vec<u32>,
    grid_dims: Vec<GridDims>,
    extended: Option<ExtendedScores<T>>,
}

impl<T: Scalar> TokenGrid<T> {
    /// Builds a grid. `keys` is row-major, `n_tokens × key_dim`.
    pub fn new(
        scores: Vec<T>,
        positions: Vec<Position>,
        keys: Vec<T>,
        key_dim: usize,
        subimage_ids: Vec<u32>,
        grid_dims: Vec<GridDims>,
    ) -> Result<Self> {
        let grid = Self {
            scores,
            positions,
            keys,
            key_dim,
            subimage_ids,
            grid_dims,
            extended: None,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Single image whose tokens cover an `height × width` raster in row-major order.
    pub fn raster(
        height: u32,
        width: u32,
        scores: Vec<T>,
        keys: Vec<T>,
        key_dim: usize,
    ) -> Result<Self> {
        let positions = (0..height)
            .flat_map(|r| (0..width).map(move |c| Position::new(r, c)))
            .collect::<Vec<_>>();
        let n = positions.len();
        Self::new(
            scores,
            positions,
            keys,
            key_dim,
            vec![0; n],
            vec![GridDims::new(height, width)],
        )
    }

    pub fn with_extended(mut self, extended: ExtendedScores<T>) -> Result<Self> {
        self.extended = Some(extended);
        self.validate()?;
        Ok(self)
    }

    /// Same tokens with replaced scores.
    pub fn with_scores(&self, scores: Vec<T>) -> Result<Self> {
        let mut grid = self.clone();
        grid.scores = scores;
        grid.validate()?;
        Ok(grid)
    }

    /// Reorders tokens so that new token `k` is old token `order[k]`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_tokens();
        let mut seen = vec![false; n];
        if order.len() != n
            || order
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::validation(
                "order",
                "not a permutation of the token indices",
            ));
        }
        let d = self.key_dim;
        let grid = Self {
            scores: order.iter().map(|&i| self.scores[i]).collect(),
            positions: order.iter().map(|&i| self.positions[i]).collect(),
            keys: order
                .iter()
                .flat_map(|&i| self.key(i).iter().copied())
                .collect(),
            key_dim: d,
            subimage_ids: order.iter().map(|&i| self.subimage_ids[i]).collect(),
            grid_dims: self.grid_dims.clone(),
            extended: self.extended.as_ref().map(|e| ExtendedScores {
                cross_attention: order.iter().map(|&i| e.cross_attention[i]).collect(),
                self_attention: order.iter().map(|&i| e.self_attention[i]).collect(),
            }),
        };
        Ok(grid)
    }

    /// Converts every real field to another scalar type.
    pub fn cast<U: Scalar>(&self) -> TokenGrid<U> {
        let conv = |v: &[T]| {
            v.iter()
                .map(|x| U::from_f64_nearest(x.to_f64_lossless()))
                .collect::<Vec<U>>()
        };
        TokenGrid {
            scores: conv(&self.scores),
            positions: self.positions.clone(),
            keys: conv(&self.keys),
            key_dim: self.key_dim,
            subimage_ids: self.subimage_ids.clone(),
            grid_dims: self.grid_dims.clone(),
            extended: self.extended.as_ref().map(|e| ExtendedScores {
                cross_attention: conv(&e.cross_attention),
                self_attention: conv(&e.self_attention),
            }),
        }
    }

    pub fn n_tokens(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn key_dim(&self) -> usize {
        self.key_dim
    }

    /// Key vector of token `i`.
    pub fn key(&self, i: usize) -> &[T] {
        &self.keys[i * self.key_dim..(i + 1) * self.key_dim]
    }

    /// All keys, row-major.
    pub fn keys(&self) -> &[T] {
        &self.keys
    }

    pub fn subimage_ids(&self) -> &[u32] {
        &self.subimage_ids
    }

    pub fn grid_dims(&self) -> &[GridDims] {
        &self.grid_dims
    }

    pub fn n_subimages(&self) -> usize {
        self.grid_dims.len()
    }

    /// Dimensions of the sub-image token `i` belongs to.
    pub fn dims_of(&self, i: usize) -> GridDims {
        self.grid_dims[self.subimage_ids[i] as usize]
    }

    pub fn extended(&self) -> Option<&ExtendedScores<T>> {
        self.extended.as_ref()
    }

    /// Token indices grouped by sub-image, each group in ascending order.
    pub fn members_by_subimage(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.grid_dims.len()];
        for (i, &s) in self.subimage_ids.iter().enumerate() {
            groups[s as usize].push(i);
        }
        groups
    }

    fn validate(&self) -> Result<()> {
        let n = self.scores.len();
        if n == 0 {
            return Err(Error::validation("n_tokens", "grid has no tokens"));
        }
        if let Some(i) = self
            .scores
            .iter()
            .position(|s| !s.is_finite() || *s < T::zero())
        {
            return Err(Error::validation(
                "scores",
                format!(
                    "token {i} has score {} (must be finite and >= 0)",
                    self.scores[i]
                ),
            ));
        }
        if self.grid_dims.is_empty() {
            return Err(Error::validation(
                "grid_dims",
                "at least one sub-image is required",
            ));
        }
        if let Some(k) = self
            .grid_dims
            .iter()
            .position(|d| d.height == 0 || d.width == 0)
        {
            return Err(Error::validation(
                "grid_dims",
                format!("sub-image {k} has an empty extent"),
            ));
        }
        if self.subimage_ids.len() != n {
            return Err(Error::validation(
                "subimage_ids",
                format!("expected {n} entries, found {}", self.subimage_ids.len()),
            ));
        }
        if let Some(i) = self
            .subimage_ids
            .iter()
            .position(|&s| s as usize >= self.grid_dims.len())
        {
            return Err(Error::validation(
                "subimage_ids",
                format!(
                    "token {i} refers to sub-image {} of {}",
                    self.subimage_ids[i],
                    self.grid_dims.len()
                ),
            ));
        }
        if self.positions.len() != n {
            return Err(Error::validation(
                "positions",
                format!("expected {n} entries, found {}", self.positions.len()),
            ));
        }
        let mut occupied = HashSet::with_capacity(n);
        for (i, (&p, &s)) in self.positions.iter().zip(&self.subimage_ids).enumerate() {
            let dims = self.grid_dims[s as usize];
            if !dims.contains(p) {
                return Err(Error::validation(
                    "positions",
                    format!(
                        "token {i} at ({}, {}) lies outside its {}x{} sub-image",
                        p.row, p.col, dims.height, dims.width
                    ),
                ));
            }
            if !occupied.insert((s, p)) {
                return Err(Error::validation(
                    "positions",
                    format!(
                        "token {i} duplicates position ({}, {}) in sub-image {s}",
                        p.row, p.col
                    ),
                ));
            }
        }
        if self.key_dim == 0 {
            return Err(Error::validation("keys", "key_dim must be at least 1"));
        }
        if self.keys.len() != n * self.key_dim {
            return Err(Error::validation(
                "keys",
                format!(
                    "expected {} values ({n} x {}), found {}",
                    n * self.key_dim,
                    self.key_dim,
                    self.keys.len()
                ),
            ));
        }
        if let Some(k) = self.keys.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(
                "keys",
                format!("token {} has a non-finite key entry", k / self.key_dim),
            ));
        }
        if let Some(ext) = &self.extended {
            for (name, v) in [
                ("cross_attention", &ext.cross_attention),
                ("self_attention", &ext.self_attention),
            ] {
                if v.len() != n {
                    return Err(Error::validation(
                        "extended",
                        format!("{name} has {} entries, expected {n}", v.len()),
                    ));
                }
                if v.iter().any(|x| !x.is_finite() || *x < T::zero()) {
                    return Err(Error::validation(
                        "extended",
                        format!("{name} must be finite and >= 0"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(err: Error) -> &'static str {
        match err {
            Error::Validation { field, .. } => field,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn raster_builds_row_major_positions() {
        let g = TokenGrid::raster(2, 3, vec![1.0f64; 6], vec![0.0; 6], 1).unwrap();
        assert_eq!(g.positions()[4], Position::new(1, 1));
        assert_eq!(g.n_subimages(), 1);
    }

    #[test]
    fn rejects_bad_fields_by_name() {
        let ok = || TokenGrid::raster(1, 2, vec![1.0f64, 2.0], vec![1.0, 0.0], 1).unwrap();
        assert_eq!(
            field_of(ok().with_scores(vec![1.0, -0.5]).unwrap_err()),
            "scores"
        );
        assert_eq!(
            field_of(ok().with_scores(vec![f64::NAN, 0.5]).unwrap_err()),
            "scores"
        );
        assert_eq!(
            field_of(TokenGrid::raster(1, 2, vec![1.0f64, 2.0], vec![1.0], 1).unwrap_err()),
            "keys"
        );
        let dup = TokenGrid::new(
            vec![1.0f64, 1.0],
            vec![Position::new(0, 0), Position::new(0, 0)],
            vec![1.0, 1.0],
            1,
            vec![0, 0],
            vec![GridDims::new(1, 2)],
        );
        assert_eq!(field_of(dup.unwrap_err()), "positions");
        let out = TokenGrid::new(
            vec![1.0f64],
            vec![Position::new(0, 5)],
            vec![1.0],
            1,
            vec![0],
            vec![GridDims::new(1, 2)],
        );
        assert_eq!(field_of(out.unwrap_err()), "positions");
        let empty =
            TokenGrid::<f64>::new(vec![], vec![], vec![], 1, vec![], vec![GridDims::new(1, 1)]);
        assert_eq!(field_of(empty.unwrap_err()), "n_tokens");
    }

    #[test]
    fn same_position_allowed_in_different_subimages() {
        let g = TokenGrid::new(
            vec![1.0f64, 1.0],
            vec![Position::new(0, 0), Position::new(0, 0)],
            vec![1.0, 1.0],
            1,
            vec![0, 1],
            vec![GridDims::new(1, 1), GridDims::new(1, 1)],
        );
        assert!(g.is_ok());
    }

    #[test]
    fn reordered_rejects_non_permutations() {
        let g = TokenGrid::raster(1, 3, vec![1.0f64, 2.0, 3.0], vec![0.0; 3], 1).unwrap();
        assert!(g.reordered(&[0, 0, 1]).is_err());
        let r = g.reordered(&[2, 0, 1]).unwrap();
        assert_eq!(r.scores(), &[3.0, 1.0, 2.0]);
        assert_eq!(r.positions()[0], Position::new(0, 2));
    }
}
