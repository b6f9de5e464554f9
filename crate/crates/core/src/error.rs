//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or vector shapes are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A decomposition was asked for more dimensions than the data supports.
    #[error("requested {requested} dimensions but numerical rank is {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    /// Input is structurally valid but degenerate for the requested operation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Caliper matching produced zero pairs.
    #[error("no matches within caliper")]
    NoMatches,

    /// An iterative solver failed to make progress.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Invalid configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
