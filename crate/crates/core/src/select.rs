//! Greedy adaptive non-maximum suppression over visual tokens.
//!
//! Each round keeps the highest-scoring candidate and multiplicatively
//! suppresses the candidates around it:
//!
//! ```text
//! s_j <- s_j * (1 - exp(-d_ij^2 / 2σ_d^2) * exp(-(1 - cos(k_i, k_j))^2 / 2σ_s^2))
//! ```
//!
//! Suppression is confined to the selected token's sub-image and, when a
//! cutoff is configured, to tokens within `cutoff_multiplier * σ_d` patches.
//! Candidate lookup goes through a lazily invalidated max-heap and a dense
//! per-sub-image position table, so a round costs `O(r² log n)` for radius `r`
//! instead of a full rescan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::baselines;
use crate::config::{PruneConfig, Strategy};
use crate::error::Result;
use crate::grid::TokenGrid;
use crate::kernels::{
    cosine_with_norms, gaussian_correction, norm, patch_distance, similarity_decay_clamped,
    spatial_decay,
};
use crate::scalar::{lit, Scalar};

/// One round of the selection loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub selected: usize,
    /// Candidates whose working score changed in this round.
    pub suppressed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneResult<T> {
    /// Retained token indices, in selection order.
    pub retained: Vec<usize>,
    /// Working score of every token when the loop stopped. Selected tokens
    /// keep the value they had when picked.
    pub final_scores: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    score: T,
    index: usize,
}

impl<T: Scalar> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Candidate<T> {}

impl<T: Scalar> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Candidate<T> {
    // Max-heap order: higher score first, then lower index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .partial_cmp(&other.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Dense position lookup for one sub-image.
struct SubimageTable {
    height: u32,
    width: u32,
    cells: Vec<Option<usize>>,
    members: Vec<usize>,
}

/// Stepwise adaptive NMS. [`adaptprune_select`] drives it to completion; the
/// stepper is public so callers can observe working scores between rounds.
pub struct AdaptiveNms<'g, T: Scalar> {
    grid: &'g TokenGrid<T>,
    scores: Vec<T>,
    selected: Vec<bool>,
    norms: Vec<T>,
    tables: Vec<SubimageTable>,
    heap: BinaryHeap<Candidate<T>>,
    sigma_d: T,
    sigma_s: T,
    similarity: bool,
    radius: Option<f64>,
    rounds: usize,
}

impl<'g, T: Scalar> AdaptiveNms<'g, T> {
    pub fn new(grid: &'g TokenGrid<T>, config: &PruneConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::build(grid, config))
    }

    /// Like [`new`](Self::new) but accepts cutoff multipliers below 1. Only
    /// useful for demonstrating what an undersized radius does.
    #[doc(hidden)]
    pub fn new_relaxed(grid: &'g TokenGrid<T>, config: &PruneConfig) -> Result<Self> {
        config.validate_common()?;
        Ok(Self::build(grid, config))
    }

    fn build(grid: &'g TokenGrid<T>, config: &PruneConfig) -> Self {
        let scores = if config.correction_enabled() {
            gaussian_correction(grid, config.gaussian_sigma).expect("sigma validated with config")
        } else {
            grid.scores().to_vec()
        };
        let n = grid.n_tokens();
        let mut tables: Vec<SubimageTable> = grid
            .grid_dims()
            .iter()
            .map(|d| SubimageTable {
                height: d.height,
                width: d.width,
                cells: Vec::new(),
                members: Vec::new(),
            })
            .collect();
        for (i, (&sub, &p)) in grid.subimage_ids().iter().zip(grid.positions()).enumerate() {
            let t = &mut tables[sub as usize];
            if t.cells.is_empty() {
                t.cells = vec![None; t.height as usize * t.width as usize];
            }
            t.cells[p.row as usize * t.width as usize + p.col as usize] = Some(i);
            t.members.push(i);
        }
        let heap = scores
            .iter()
            .enumerate()
            .map(|(index, &score)| Candidate { score, index })
            .collect();
        Self {
            grid,
            norms: (0..n).map(|i| norm(grid.key(i))).collect(),
            scores,
            selected: vec![false; n],
            tables,
            heap,
            sigma_d: lit(config.sigma_d),
            sigma_s: lit(config.sigma_s),
            similarity: config.similarity_enabled,
            radius: config.cutoff_multiplier.map(|m| m * config.sigma_d),
            rounds: 0,
        }
    }

    /// Current working scores.
    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected[i]
    }

    /// Selects the next token and suppresses its neighbours. Returns `None`
    /// once every token has been selected.
    pub fn step(&mut self) -> Option<TraceStep> {
        let i = loop {
            let top = self.heap.pop()?;
            if !self.selected[top.index] && top.score == self.scores[top.index] {
                break top.index;
            }
        };
        self.selected[i] = true;
        let suppressed = self.suppress_around(i);
        let step = TraceStep {
            iteration: self.rounds,
            selected: i,
            suppressed,
        };
        self.rounds += 1;
        Some(step)
    }

    fn suppress_around(&mut self, i: usize) -> usize {
        let sub = self.grid.subimage_ids()[i] as usize;
        let table = &self.tables[sub];
        let centre = self.grid.positions()[i];
        let mut touched = Vec::new();
        match self.radius {
            None => touched.extend(table.members.iter().copied()),
            Some(r) => {
                let reach = r.floor().min(f64::from(u32::MAX)) as u32;
                let r0 = centre.row.saturating_sub(reach);
                let r1 = centre.row.saturating_add(reach).min(table.height - 1);
                let c0 = centre.col.saturating_sub(reach);
                let c1 = centre.col.saturating_add(reach).min(table.width - 1);
                for row in r0..=r1 {
                    let base = row as usize * table.width as usize;
                    for col in c0..=c1 {
                        if let Some(j) = table.cells[base + col as usize] {
                            touched.push(j);
                        }
                    }
                }
            }
        }
        let radius = self.radius.map(lit::<T>);
        let key_i = self.grid.key(i);
        let mut changed = 0;
        for j in touched {
            if self.selected[j] {
                continue;
            }
            let d: T = patch_distance(centre, self.grid.positions()[j]);
            if radius.is_some_and(|r| d > r) {
                continue;
            }
            let d_sim = if self.similarity {
                let c = cosine_with_norms(key_i, self.grid.key(j), self.norms[i], self.norms[j]);
                similarity_decay_clamped(c, self.sigma_s)
            } else {
                T::one()
            };
            let weight = spatial_decay(d, self.sigma_d) * d_sim;
            let updated = self.scores[j] * (T::one() - weight);
            if updated != self.scores[j] {
                self.scores[j] = updated;
                self.heap.push(Candidate {
                    score: updated,
                    index: j,
                });
                changed += 1;
            }
        }
        changed
    }

    /// Runs `count` rounds and packages the result.
    pub fn run(mut self, count: usize, trace: bool) -> PruneResult<T> {
        let mut retained = Vec::with_capacity(count);
        let mut steps = trace.then(Vec::new);
        while retained.len() < count {
            let Some(step) = self.step() else { break };
            retained.push(step.selected);
            if let Some(s) = steps.as_mut() {
                s.push(step);
            }
        }
        PruneResult {
            retained,
            final_scores: self.scores,
            trace: steps,
        }
    }
}

/// Adaptive NMS selection of `keep_count(n)` tokens.
///
/// Runs regardless of `config.strategy`; use [`prune`] to dispatch on it.
pub fn adaptprune_select<T: Scalar>(
    grid: &TokenGrid<T>,
    config: &PruneConfig,
) -> Result<PruneResult<T>> {
    let count = config.keep_count(grid.n_tokens());
    Ok(AdaptiveNms::new(grid, config)?.run(count, config.trace))
}

#[doc(hidden)]
pub fn adaptprune_select_relaxed<T: Scalar>(
    grid: &TokenGrid<T>,
    config: &PruneConfig,
) -> Result<PruneResult<T>> {
    let count = config.keep_count(grid.n_tokens());
    Ok(AdaptiveNms::new_relaxed(grid, config)?.run(count, config.trace))
}

/// Runs the strategy named in `config`.
pub fn prune<T: Scalar>(grid: &TokenGrid<T>, config: &PruneConfig) -> Result<PruneResult<T>> {
    match config.strategy {
        Strategy::AdaptPrune => adaptprune_select(grid, config),
        _ => baselines::baseline_select(grid, config),
    }
}
