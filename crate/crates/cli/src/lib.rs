//! Scenario files, repetitions, sweeps and replay over the `expanderquorum`
//! simulator.

pub mod config;
pub mod graph_check;
pub mod output;
pub mod runner;
pub mod scenario;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {reason}")]
    ConfigParse { path: PathBuf, line: usize, reason: String },
    #[error("invalid value for `{key}`: {reason}")]
    ConfigValue { key: String, reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed record {path}: {source}")]
    Record { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Graph(#[from] expanderquorum::overlay::OverlayError),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn value(key: &str, reason: impl Into<String>) -> CliError {
        CliError::ConfigValue { key: key.to_string(), reason: reason.into() }
    }
}
