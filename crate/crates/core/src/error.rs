use crate::model::{FactoryId, ValidationReport};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("metric denominator is zero")]
    ZeroDenominator,

    #[error("allocation violates {} constraint(s)", .0.violation_count())]
    InvalidAllocation(Box<ValidationReport>),

    #[error("infeasible: factory {factory} needs {required} orders but only {available} eligible remain")]
    Infeasible {
        factory: FactoryId,
        required: u64,
        available: u64,
    },

    #[error("infeasible move: {0}")]
    InfeasibleMove(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("empty curve")]
    EmptyCurve,

    #[error("lead day {0} is missing from the horizon")]
    MissingDay(i32),

    #[error("day {lead_day}: {source}")]
    Day {
        lead_day: i32,
        #[source]
        source: Box<Error>,
    },

    #[error("MPS parse error at line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_day(self, lead_day: i32) -> Error {
        Error::Day {
            lead_day,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through day context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Day { source, .. } => source.root(),
            other => other,
        }
    }
}
