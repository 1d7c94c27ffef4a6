use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: location already given on line {first}")]
    Duplicate { line: usize, first: usize },

    #[error("input holds no data points")]
    EmptyInput,

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Fit(#[from] thbfit::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), msg: e.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
