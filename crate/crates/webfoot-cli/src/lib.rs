//! Batch experiment harness: configuration parsing, plan execution and file
//! emission for the webfoot swimming-leg simulator.

pub mod config;
pub mod csvio;
pub mod runner;
pub mod svg;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("unknown config key {key:?}")]
    UnknownKey { key: String },

    #[error("config value out of range for {key}: {msg}")]
    Range { key: String, msg: String },

    #[error(transparent)]
    Sim(#[from] webfoot::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed timeseries file {path}: {msg}")]
    MalformedTimeseries { path: String, msg: String },
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 1 for run failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Parse { .. }
            | HarnessError::UnknownKey { .. }
            | HarnessError::Range { .. } => 2,
            _ => 1,
        }
    }
}

pub use config::{parse_config, ExperimentPlan, Resolved};
pub use runner::{run_plan, ConfigAggregate, PlanOutcome, TrialResult};
