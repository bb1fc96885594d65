//! Command-line toolchain over `crala-core`: file loading, the full check
//! pipeline, repository loading, DOT and JSON output.

pub mod commands;
pub mod dot;
pub mod load;
pub mod pipeline;
pub mod render;
pub mod repository;

pub use commands::{run, run_with, CommandOutcome};
