//! Std companion to `webrl-core`: the training driver, evaluation, on-disk
//! formats, ablation harness and reporting used by the `webrl-lab` binary.

pub mod ablation;
pub mod config;
pub mod driver;
pub mod eval;
pub mod par;
pub mod persist;
pub mod report;

pub use config::{Method, RunConfig};
pub use driver::{run_training, Lab, PhaseResult, RunSummary};
