use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("state matrix is not Schur stable (spectral radius {0})")]
    Unstable(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polytopic multiplier needs 2^{m} vertex constraints, above the cap of 2^{cap}")]
    VertexBudget { m: usize, cap: usize },

    #[error("bisection did not converge after {0} iterations")]
    Bisection(usize),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("certificate rejected: {0}")]
    Unverified(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("config key `{key}`: {reason}")]
    ConfigKey { key: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn key(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigKey {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
