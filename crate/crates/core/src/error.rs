use thiserror::Error;

/// Errors raised across the crate.
///
/// Solver non-convergence and certificate failure are *not* errors; they are
/// reported as data on the respective result types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unsupported family `{family}`: {reason}")]
    UnsupportedFamily { family: String, reason: String },

    #[error("no coherence value up to {limit} satisfies the stochastic incoherence conditions")]
    NoValidCoherence { limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("combinatorial budget exceeded: {count} candidates > limit {limit}")]
    BudgetExceeded { count: u128, limit: u128 },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
