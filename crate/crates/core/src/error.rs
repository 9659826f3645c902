use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid construction or evaluation parameters.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Operands of incompatible shape.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input outside the channel or function domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The exhaustive computation would exceed its enumeration budget.
    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    Budget { what: &'static str, needed: usize, limit: usize },

    /// A root finder could not bracket the requested crossing.
    #[error("bracket failure: {0}")]
    Bracket(String),

    /// An identity that must hold by construction did not; signals a bug
    /// or a corrupted input.
    #[error("internal consistency violated: {0}")]
    Consistency(String),
}
