use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{0} is not prime")]
    NotPrime(String),

    /// Gram-Schmidt hit a row that lies in the span of the previous rows.
    #[error("basis is rank deficient: row {row} depends on the previous rows")]
    RankDeficient { row: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Exact enumeration was refused because the lattice is too large.
    #[error("lattice dimension {dim} exceeds the enumeration cap {cap}")]
    EnumerationCap { dim: usize, cap: usize },

    #[error("enumeration aborted after visiting {nodes} nodes")]
    EnumerationBudget { nodes: u64 },

    /// Floating-point reduction failed to make progress (precision loss).
    #[error("floating-point LLL did not converge: {0}")]
    Precision(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
