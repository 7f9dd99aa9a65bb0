use thiserror::Error;

/// Errors raised by the confinement toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("point {point:?} is outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("potential is singular at {point:?}: {what}")]
    Singular { point: Vec<f64>, what: String },
    #[error("chart is degenerate at {param:?} (rank {rank} < {expected})")]
    Rank { param: Vec<f64>, rank: usize, expected: usize },
    #[error("range error: {0}")]
    Range(String),
    #[error("chart error: {0}")]
    Chart(String),
    #[error("cannot assemble edge {from:?} -> {to:?}: {reason}")]
    Assembly { from: Vec<f64>, to: Vec<f64>, reason: String },
    #[error("eigensolver did not converge (achieved residual {residual:e})")]
    Solver { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported singularity: {0}")]
    UnsupportedSingularity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
