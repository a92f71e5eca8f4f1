use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row {0} has (near) zero norm")]
    ZeroRow(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry encountered: {0}")]
    NonFinite(String),
    #[error("system is inconsistent (residual {0:e})")]
    Inconsistent(f64),
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cannot split {m} rows into {ell} blocks")]
    BadBlockCount { m: usize, ell: usize },
    #[error("support enumeration too large ({0} supports)")]
    TooLarge(u128),
    #[error("invalid sampling spec: {0}")]
    InvalidSampling(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("stochastic conditioning parameter must be positive, got {0}")]
    NonPositiveConditioning(f64),
    #[error("bad spectrum bounds: {0}")]
    BadSpectrum(String),
    #[error("bad interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("missing spectrum information: {0}")]
    MissingSpectrum(String),
    #[error("system rows are not normalized")]
    NotNormalized,
    #[error("bad problem dimensions: {0}")]
    BadDimensions(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
