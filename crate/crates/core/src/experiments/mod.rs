//! Config-driven experiment harnesses and their reports.

pub mod config;
pub mod output;
pub mod runners;
pub mod search;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind};
pub use output::{Report, Row, Verdict};
pub use runners::run_experiment;
