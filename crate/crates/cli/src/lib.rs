//! Configuration, orchestration and output for the `spam-forge` binary.

pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, Kind, RawConfig};
pub use runner::{default_workers, run, RunError, RunSummary};
