use thiserror::Error;

/// Errors raised by the numerical laboratory.
///
/// The variants separate bad input (`Validation`, `Domain`), unmet
/// hypotheses (`Precondition`), caller bugs (`Contract`) and genuine
/// numerical trouble (`Numerical`, `InvariantBreach`).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        /// Last residual or change measure seen before giving up, if any.
        last_residual: Option<f64>,
    },

    #[error("invariant breach: {0}")]
    InvariantBreach(String),

    #[error("internal contradiction: {0}")]
    Contradiction(String),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            last_residual: None,
        }
    }

    pub(crate) fn numerical_with(message: impl Into<String>, residual: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            last_residual: Some(residual),
        }
    }

    /// Whether the error stems from user input rather than from the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Domain(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
