use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("grid would need {n} nodes, above the cap of {cap}")]
    GridTooLarge { n: usize, cap: usize },

    #[error("invalid initial data: {0}")]
    InitialData(String),

    #[error("array length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("root solve did not converge at node {node} (residual {residual:e}) after {iterations} iterations")]
    RootSolve {
        node: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("non-finite value at node {node}, step {step}")]
    NonFinite { node: usize, step: u64 },

    #[error("reference integrator unstable: norm grew from {from:e} to {to:e}")]
    Unstable { from: f64, to: f64 },

    #[error("characteristic x = {x} at t = {t} left the grid")]
    TraceOutsideGrid { t: f64, x: f64 },

    #[error("region leaves the grid at t = {t}")]
    RegionOutsideGrid { t: f64 },

    #[error("history too short: {0}")]
    ShortHistory(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("snapshot error in {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
