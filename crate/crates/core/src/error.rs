use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a rational number: {0:?} (expected \"p/q\" or \"p\")")]
pub struct ParseRationalError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseRationalError),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("Bowen distance needs at least one step (m = 0)")]
    ZeroSteps,

    #[error("block {0} is not materialized")]
    Unmaterialized(u64),

    #[error("budget exceeded: {needed} items requested, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },

    #[error("invalid cylinder code: {0}")]
    InvalidCode(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("system file does not match the system rebuilt from its spec")]
    Tampered,

    #[error("malformed file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
