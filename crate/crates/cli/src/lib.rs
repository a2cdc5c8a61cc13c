//! Experiment harness: TOML configs, the suites behind each acceptance
//! criterion, manifests with file digests, and reports.

pub mod config;
pub mod manifest;
pub mod report;
pub mod run;
pub mod suites;

pub use config::{ConfigError, ExperimentConfig, Suite};
pub use manifest::{CheckItem, RunManifest};
pub use report::{emit_report, Format};
pub use run::{run_check, run_experiment, CheckSummary, RunError};
