use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter(String),
    /// A fluid case tag was requested that does not apply to the parameters.
    InvalidCase(String),
    /// An arrival strategy is not a probability vector of the right length.
    InvalidStrategy(String),
    /// An iterative numerical procedure broke down.
    NumericFailure(String),
    /// The best-response scan found no admissible first arrival slot.
    InfeasibleResponse(String),
}

/// Convenience alias.
pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::InvalidCase(m) => write!(f, "invalid case: {m}"),
            Error::InvalidStrategy(m) => write!(f, "invalid strategy: {m}"),
            Error::NumericFailure(m) => write!(f, "numeric failure: {m}"),
            Error::InfeasibleResponse(m) => write!(f, "infeasible response: {m}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidParameter(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
