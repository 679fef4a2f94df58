use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in the core crate.
///
/// [`Error::is_input`] separates caller mistakes (bad shapes, invalid
/// parameters) from numeric or mathematical failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    #[error("domain error at (i={i}, j={j}): {reason}")]
    Domain { i: usize, j: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigenvalue gap underflow at step {step} (pair {pair})")]
    GapUnderflow { step: usize, pair: usize },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for validation failures attributable to the caller's input.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Input(_) | Error::DimensionMismatch { .. })
    }
}
