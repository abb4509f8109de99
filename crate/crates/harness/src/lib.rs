//! Experiment harness: point sampling, synthetic targets, CSV datasets with
//! k-fold splits, experiment orchestration and CSV reports.

pub mod basis_info;
pub mod checks;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod report;
pub mod sampling;
pub mod targets;

pub use config::{ExperimentConfig, ExperimentKind, ModelKind};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentOutput, TrialResult};
pub use pann_core::pde::relative_l2_error;
pub use report::ReportRow;
