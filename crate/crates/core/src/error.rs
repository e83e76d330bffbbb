use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("matrix must be square, found {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("pattern index ({row}, {col}) out of range for order {n}")]
    PatternOutOfRange { row: usize, col: usize, n: usize },

    #[error("duplicate pattern index ({row}, {col})")]
    PatternDuplicate { row: usize, col: usize },

    #[error("invalid block sizes |I|={rows}, |J|={cols} for order {n}: need |I|+|J|=n+1, both >= 1")]
    InvalidBlockSizes { rows: usize, cols: usize, n: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("order {0} too large for permutation enumeration (max 10)")]
    OrderTooLarge(usize),

    #[error("matrix does not lie in the structure space: residual {residual:e} exceeds {tolerance:e}")]
    NotInStructure { residual: f64, tolerance: f64 },

    #[error("least-squares system is inconsistent: residual {residual:e} exceeds {tolerance:e}")]
    InconsistentSystem { residual: f64, tolerance: f64 },

    #[error("regularization parameter must be positive, got {0:e}")]
    NonPositiveEpsilon(f64),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("operation requires a kernel space, found a block space")]
    NotKernelSpace,

    #[error("factorization failed: {0}")]
    Factorization(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
