pub mod compare;
pub mod flops;
pub mod prune;
pub mod stats;
pub mod synth;
pub mod verify;
