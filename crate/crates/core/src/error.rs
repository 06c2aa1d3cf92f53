//! Error types shared across the crate.

use thiserror::Error;

/// Failures of the dense least-squares machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "design matrix is rank deficient (condition estimate {condition:e} exceeds {threshold:e})"
    )]
    RankDeficient { condition: f64, threshold: f64 },
    #[error("column {0} is identically zero")]
    ZeroColumn(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Failures while fitting one of the closed-form phase polynomials.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} usable samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Invalid parameters for one of the domain types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvalidInput {
    #[error("{field}: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("{0}")]
    Precondition(String),
}

impl InvalidInput {
    pub(crate) fn field(field: &'static str, reason: impl Into<String>) -> Self {
        InvalidInput::Field {
            field,
            reason: reason.into(),
        }
    }
}

/// Failures reading key-value configuration files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] InvalidInput),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Failures of trace ingestion and aggregation.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown trace format `{0}` (expected `delimited` or `line-json`)")]
    UnknownFormat(String),
    #[error("selection is empty")]
    EmptySelection,
    #[error("histogram edges must be strictly increasing and finite")]
    BadEdges,
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A malformed trace line; collected, never silently dropped.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct LineError {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub message: String,
}
