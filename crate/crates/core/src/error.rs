//! Crate-wide error type.

/// Errors reported by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("right-hand side has zero norm")]
    ZeroRhs,
    #[error("bidiagonalization already terminated: {0}")]
    Terminated(String),
    #[error("iteration {k} outside computed range (have {have} steps)")]
    KOutOfRange { k: usize, have: usize },
    #[error("iteration {k} needs one more bidiagonalization step (alpha_{next} not computed)", next = k + 1)]
    NeedsOneMoreStep { k: usize },
    #[error("matrix is numerically rank-deficient (|R[{index},{index}]| = {value:.3e})")]
    RankDeficient { index: usize, value: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    #[error("zero vector: {0} is undefined")]
    ZeroVector(&'static str),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("matrix market parse error at line {line}: {reason}")]
    MtxParse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
