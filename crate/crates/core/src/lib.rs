//! Visual-token pruning for vision-language models.
//!
//! Attention scores are first re-weighted by a centre-peaked Gaussian to undo
//! the positional bias of decoder attention, then tokens are picked greedily
//! with an adaptive non-maximum suppression that discounts neighbours by
//! spatial distance and key similarity. Comparison baselines, an analytic
//! FLOPs model, attention statistics and a brute-force reference live
//! alongside.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod analysis;
pub mod baselines;
pub mod config;
pub mod error;
pub mod flops;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod oracle;
pub mod scalar;
pub mod select;
pub mod synth;

pub use baselines::baseline_select;
pub use config::{GaussianSigma, PruneConfig, Strategy};
pub use error::{Error, Result};
pub use grid::{ExtendedScores, GridDims, Position};
pub use kernels::{cosine_similarity, gaussian_correction, similarity_decay, spatial_decay};
pub use oracle::{cutoff_discrepancy, reference_select};
pub use scalar::Scalar;
pub use select::{adaptprune_select, prune, AdaptiveNms, TraceStep};

/// Token grid in double precision, the engine's working type.
pub type TokenGrid = grid::TokenGrid<f64>;
pub type TokenGridF32 = grid::TokenGrid<f32>;
pub type PruneResult = select::PruneResult<f64>;
pub type PruneResultF32 = select::PruneResult<f32>;
pub type RetainedSetMetrics = analysis::RetainedSetMetrics<f64>;
