//! Experiment runner, reports and figures for the `minlgan` command.

pub mod apply;
pub mod config;
pub mod error;
pub mod plots;
pub mod report;
pub mod runner;
pub mod stability;
pub mod toy;
pub mod tsv;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use runner::{run_experiment, FinishedRun, RunOptions, RunRecord};
