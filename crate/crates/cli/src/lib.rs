//! Configuration parsing and experiment runner behind the `alab` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, ConfigErrors, Experiment, ExperimentConfig};
pub use run::{execute, write_artifacts, Comparison, RunOutcome};
