use adaptprune::flops::{flops_breakdown, FlopsSpec};
use clap::Args;

use crate::error::CliError;

/// Defaults describe LLaVA-1.5-7B with 576 visual tokens.
#[derive(Debug, Args)]
pub struct FlopsArgs {
    #[arg(long, default_value_t = 4096)]
    pub hidden: u64,
    #[arg(long, default_value_t = 11008)]
    pub ffn: u64,
    #[arg(long, default_value_t = 32)]
    pub layers: u64,
    #[arg(long, default_value_t = 576)]
    pub visual_tokens: u64,
    #[arg(long, default_value_t = 0)]
    pub text_tokens: u64,
    /// Layer after which visual tokens are pruned.
    #[arg(long, default_value_t = 3)]
    pub prune_layer: u64,
    /// Fraction of visual tokens retained.
    #[arg(long, default_value_t = 0.1)]
    pub keep: f64,
}

pub fn run(args: FlopsArgs) -> Result<(), CliError> {
    let spec = FlopsSpec {
        hidden_dim: args.hidden,
        ffn_dim: args.ffn,
        num_layers: args.layers,
        visual_tokens: args.visual_tokens,
        text_tokens: args.text_tokens,
        prune_layer: args.prune_layer,
        keep_fraction: args.keep,
    };
    let b = flops_breakdown(&spec)?;
    println!("baseline FLOPs:  {}", b.baseline);
    println!("pruned FLOPs:    {}", b.pruned);
    println!(
        "kept visual:     {} of {}",
        spec.kept_visual_tokens(),
        spec.visual_tokens
    );
    println!("reduction:       {:.2}%", 100.0 * b.reduction);
    Ok(())
}
