use std::fmt;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("zero tuple: every component of h vanishes")]
    ZeroTuple,

    #[error("budget exceeded for {what}: estimated {estimate}, cap {cap}")]
    BudgetExceeded {
        what: &'static str,
        estimate: Estimate,
        cap: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("region has zero measure")]
    ZeroMeasure,

    #[error("tolerance failure: {0}")]
    Tolerance(String),

    #[error("malformed cache file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Cost estimate attached to a budget refusal. Estimates can exceed `u64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate(pub f64);

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 1e15 {
            write!(f, "{:.0}", self.0)
        } else {
            write!(f, "{:.3e}", self.0)
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_budget(what: &'static str, estimate: f64, cap: u64) -> Result<()> {
    if estimate > cap as f64 {
        Err(Error::BudgetExceeded {
            what,
            estimate: Estimate(estimate),
            cap,
        })
    } else {
        Ok(())
    }
}
