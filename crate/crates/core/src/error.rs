use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precision exhausted at {bits} bits: {what}")]
    PrecisionExhausted { bits: u32, what: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid precision context: {0}")]
    InvalidContext(String),

    #[error("sign of gamma({m}) not certified at {bits} bits")]
    SignUncertified { m: u64, bits: u32 },

    #[error("root solver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("coefficient table has no entry for index {0}")]
    MissingCoefficient(u64),

    #[error("radicand of Delta({m}) not certified nonnegative")]
    RadicandUncertified { m: u64 },

    #[error("ill-conditioned fit at M={m}: relative residual {residual:e}")]
    IllConditioned { m: u64, residual: f64 },

    #[error("expansion truncated below the requested order: need m_max >= {needed}, have {have}")]
    TruncationUnsound { needed: usize, have: usize },

    #[error("Sturm chain degenerate: {0}")]
    DegenerateChain(String),

    #[error("floor not certified: argument too close to an integer")]
    FloorUncertified,

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn exhausted(bits: u32, what: impl Into<String>) -> Self {
        Error::PrecisionExhausted {
            bits,
            what: what.into(),
        }
    }

    /// True for failures that a higher working precision might cure.
    pub fn is_precision_limited(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted { .. }
                | Error::SignUncertified { .. }
                | Error::RadicandUncertified { .. }
                | Error::DegenerateChain(_)
                | Error::FloorUncertified
        )
    }
}
