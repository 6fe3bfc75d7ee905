//! Retained-set quality metrics, cross-dump attention statistics and heatmap output.

mod aggregate;
mod metrics;
mod render;

pub use aggregate::{aggregate_attention, AttentionAggregate};
pub use metrics::{compute_metrics, RetainedSetMetrics};
pub use render::{render_heatmap, ImageFormat, ImageSpec, Normalization, Palette};
