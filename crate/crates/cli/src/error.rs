use std::path::PathBuf;

use thiserror::Error;

/// A rejected configuration value, naming the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Failures while reading a dataset bundle or spectra file.
#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("{path}: covariance asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}")]
    Asymmetry {
        path: PathBuf,
        asymmetry: f64,
        tolerance: f64,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("numeric failure: {0}")]
    Numeric(#[from] hsd_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl CliError {
    /// 2 for bad configuration or inputs, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Bundle(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) | CliError::SelfCheck(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
