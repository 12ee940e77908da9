use thiserror::Error;

/// Errors raised by grid construction, lifting, sampling and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("3-increment is not closed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    NotClosed { residual: f64, tolerance: f64 },

    #[error("delay {delay} is not an integer multiple of the grid step {step}")]
    DelayNotOnGrid { delay: f64, step: f64 },

    #[error("grid index {index} outside the available range {lo}..={hi}")]
    OutOfRange { index: i64, lo: i64, hi: i64 },

    #[error("inadmissible delay pair ({v1}, {v2}) cells: v1 + v2 < 0")]
    InadmissiblePair { v1: i64, v2: i64 },

    #[error("Hurst parameter {0} outside the supported range (1/4, 1)")]
    InvalidHurst(f64),

    #[error("fractional Gaussian noise sampling failed: circulant embedding not PSD and covariance factorization failed")]
    EmbeddingFailed,

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("Picard iteration did not converge in {max_iter} iterations (last change {distance:e})")]
    NoConvergence { max_iter: usize, distance: f64 },

    #[error("history gap: no solution data at grid index {index}")]
    HistoryGap { index: i64 },

    #[error("missing lift family for delay pair ({v1}, {v2}) cells")]
    MissingLiftFamily { v1: i64, v2: i64 },

    #[error("grid with {0} cells exceeds the dense-storage limit of {max} cells", max = crate::increments::DENSE_LIMIT)]
    TooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
