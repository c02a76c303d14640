//! Configuration, orchestration and artifact persistence for frontlab experiments.

pub mod config;
pub mod csv;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::{Command, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
pub use run::{run_experiment, RunOptions};
