//! Staged, cached and seeded orchestration of the elector augmentation pipeline.
//!
//! Every command writes under the configured output directory. Stages record
//! a hash of their inputs in `stage.json` and are skipped when it matches.

pub mod config;
pub mod pipeline;

use std::path::PathBuf;

pub use config::{AnalysisConfig, ConfigSources, GnnConfig, RunConfig};
pub use pipeline::{cmd_analyze, cmd_augment, cmd_cluster, cmd_run_all, cmd_train, Metric, Report, TrainResult, Which};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{what} not found at {path}; run `{command}` first")]
    Missing {
        what: &'static str,
        path: PathBuf,
        command: &'static str,
    },

    #[error("{what} at {path} is out of date for this config; rerun `{command}`")]
    Stale {
        what: &'static str,
        path: PathBuf,
        command: &'static str,
    },

    #[error("output directory is locked by {0}; remove it if no other elco process is running")]
    Locked(PathBuf),

    #[error("written artifact failed validation: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] elco_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Stable tag used in the structured error printed on failure.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Missing { .. } => "missing_prerequisite",
            CliError::Stale { .. } => "stale_prerequisite",
            CliError::Locked(_) => "locked",
            CliError::Invalid(_) => "invalid_artifact",
            CliError::Core(_) => "pipeline",
            CliError::Io { .. } => "io",
        }
    }
}
