use thiserror::Error;

/// Errors surfaced by the verification pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dim {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("operation not supported in exact mode: {0}")]
    ExactUnsupported(String),

    #[error("point fails Clifford-Stiefel membership (residual {0:.3e})")]
    Membership(f64),

    #[error("sampling failed after {0} attempts")]
    SamplingExhausted(usize),

    #[error("not a valid second form: {0}")]
    InvalidSecondForm(String),

    #[error("block pattern violation: {0}")]
    Pattern(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dim(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dim {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
