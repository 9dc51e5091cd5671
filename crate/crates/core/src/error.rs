use crate::quadrature::QuadratureResult;

/// Errors produced by the lab.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's contract (dimension mismatch, bad parameter, non-finite input).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is not defined for this input kind.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The tail of an unbounded integral did not settle within the truncation schedule.
    #[error("quadrature did not converge: {message} (partial value {:.6e} at radius {})", partial.value, partial.truncation_radius)]
    NonConvergence {
        message: String,
        partial: QuadratureResult,
    },

    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
