//! Declarative experiment runner for `outlab-core`.
//!
//! A run resolves an [`config::ExperimentConfig`], executes its trials on a
//! worker pool, and writes `eigenvalues.csv`, `summary.json` and optionally
//! `scatter.svg`. Trial results are merged in trial order, so the CSV bytes do
//! not depend on the number of workers.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ConfigFile, Experiment, ExperimentConfig};
pub use error::CliError;
pub use experiments::{run_experiment, RunOutput, RunSummary, TrialRecord};
