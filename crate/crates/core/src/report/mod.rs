//! Config-driven evaluation runs and table emission.

mod config;
mod emit;
mod pipeline;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::survey::SurveyError;

pub use config::{
    default_steering_groups, ConcurrencyConfig, GroupRef, MimicFallback, ModelConfig, PromptConfig, ProviderConfig,
    RobustnessConfig, RunConfig, SurveyInput,
};
pub use emit::{emit_tables, format_float, write_distributions, write_errors, write_human_tables, TABLES};
pub use pipeline::{
    build_provider, build_providers, compute_results, probe_models, run, Arm, Dataset, ErrorRow, HumanTables,
    ModelProbes, ModelResults, Robustness, RunMode, RunSummary, Study,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Survey { path: PathBuf, source: SurveyError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
