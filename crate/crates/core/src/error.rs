use thiserror::Error;

/// Errors raised by the tracking library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("all posterior components have zero weight")]
    EmptyPosterior,

    #[error("assignment problem is infeasible")]
    Infeasible,

    #[error("problem too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("label {0} already present")]
    LabelCollision(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
