use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{t0}, {end}]: end must exceed start")]
    InvalidInterval { t0: f64, end: f64 },

    #[error("basis index {index} out of range (max index {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("point {t} lies outside [{t0}, {end}]")]
    OutsideInterval { t: f64, t0: f64, end: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operands live on different intervals")]
    IntervalMismatch,

    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureTolerance { estimate: f64, tolerance: f64 },

    #[error("unsupported kernel kind for this operation: {0}")]
    UnsupportedKernel(&'static str),

    #[error("kernel is complex-valued; use the complex evaluation path")]
    ComplexKernel,

    #[error("dimension mismatch: expected at least {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cache file is corrupt: {0}")]
    CorruptCache(String),

    #[error("cache key mismatch: file was written for different inputs")]
    CacheKeyMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
