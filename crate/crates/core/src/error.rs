use thiserror::Error;

/// Errors raised by the library. Every variant corresponds to invalid input
/// or an infeasible request; solver non-convergence is reported through the
/// `converged` flags on result types instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid cost table: {0}")]
    InvalidTable(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("strategy index {index} out of range (table has {n_strategies} strategies)")]
    StrategyOutOfRange { index: usize, n_strategies: usize },

    #[error("parameter `{name}` = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} too large for exhaustive enumeration: {size} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain { name, value, reason }
}
