use thiserror::Error;

/// Errors raised by the field, map, cone and sweep machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {n} too small (need n >= {min})")]
    DimensionTooSmall { n: usize, min: usize },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("non-positive value {value:e} {context}")]
    NonPositiveValue { value: f64, context: String },

    #[error("index {k} out of range 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },

    #[error("eigenvalue iteration did not converge (off-diagonal residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("quadratic fit failed: {0}")]
    FitFailure(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("no monotone start radius found: {0}")]
    MonotonicityNotFound(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
