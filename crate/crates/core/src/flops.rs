//! Analytic prefill FLOPs of a decoder stack with single-layer token pruning.
//!
//! Per layer, for `n` tokens, hidden size `d` and FFN size `m`:
//! `4nd² + 2n²d + 2ndm` (QKV/output projections, attention matrix, FFN).

use serde::{Deserialize, Serialize};

use crate::config::keep_count;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopsSpec {
    pub hidden_dim: u64,
    pub ffn_dim: u64,
    pub num_layers: u64,
    pub visual_tokens: u64,
    pub text_tokens: u64,
    /// Layer index at which visual tokens are pruned; `num_layers` means never.
    pub prune_layer: u64,
    pub keep_fraction: f64,
}

impl FlopsSpec {
    /// LLaVA-1.5-7B prefill with 576 visual tokens, pruned to 10% after layer 3.
    pub fn llava_1_5_7b() -> Self {
        Self {
            hidden_dim: 4096,
            ffn_dim: 11008,
            num_layers: 32,
            visual_tokens: 576,
            text_tokens: 0,
            prune_layer: 3,
            keep_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hidden_dim", self.hidden_dim),
            ("ffn_dim", self.ffn_dim),
            ("num_layers", self.num_layers),
        ] {
            if v == 0 {
                return Err(Error::validation(name, "must be at least 1"));
            }
        }
        if self.visual_tokens + self.text_tokens == 0 {
            return Err(Error::validation(
                "visual_tokens",
                "need at least one token in total",
            ));
        }
        if self.prune_layer > self.num_layers {
            return Err(Error::validation(
                "prune_layer",
                format!(
                    "{} exceeds the layer count {}",
                    self.prune_layer, self.num_layers
                ),
            ));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::validation(
                "keep_fraction",
                format!("must lie in (0, 1], got {}", self.keep_fraction),
            ));
        }
        Ok(())
    }

    /// Visual tokens surviving the pruning layer.
    pub fn kept_visual_tokens(&self) -> u64 {
        if self.visual_tokens == 0 {
            0
        } else {
            keep_count(self.keep_fraction, self.visual_tokens as usize) as u64
        }
    }
}

/// FLOPs of one decoder layer over `n` tokens.
pub fn layer_flops(n: u64, hidden_dim: u64, ffn_dim: u64) -> u128 {
    let (n, d, m) = (u128::from(n), u128::from(hidden_dim), u128::from(ffn_dim));
    4 * n * d * d + 2 * n * n * d + 2 * n * d * m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlopsBreakdown {
    pub baseline: u128,
    pub pruned: u128,
    /// `1 - pruned / baseline`.
    pub reduction: f64,
}

pub fn flops_breakdown(spec: &FlopsSpec) -> Result<FlopsBreakdown> {
    spec.validate()?;
    let full = layer_flops(
        spec.visual_tokens + spec.text_tokens,
        spec.hidden_dim,
        spec.ffn_dim,
    );
    let thin = layer_flops(
        spec.kept_visual_tokens() + spec.text_tokens,
        spec.hidden_dim,
        spec.ffn_dim,
    );
    let baseline = u128::from(spec.num_layers) * full;
    let pruned =
        u128::from(spec.prune_layer) * full + u128::from(spec.num_layers - spec.prune_layer) * thin;
    Ok(FlopsBreakdown {
        baseline,
        pruned,
        reduction: 1.0 - pruned as f64 / baseline as f64,
    })
}

/// Fraction of prefill FLOPs saved by pruning.
pub fn reduction(spec: &FlopsSpec) -> Result<f64> {
    flops_breakdown(spec).map(|b| b.reduction)
}
