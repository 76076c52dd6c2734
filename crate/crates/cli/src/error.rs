use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown suite `{0}` (expected cone, curvature, gauge, geodesic, chern, index, scales or all)")]
    UnknownSuite(String),
    #[error("invalid config at line {line}, key `{key}`: {reason}")]
    ConfigInvalid { line: usize, key: String, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("i/o failure on {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Core(#[from] polymet_core::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> CliError {
        CliError::Io { path: path.as_ref().display().to_string(), reason: e.to_string() }
    }

    pub fn config(line: usize, key: &str, reason: impl Into<String>) -> CliError {
        CliError::ConfigInvalid { line, key: key.to_string(), reason: reason.into() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
