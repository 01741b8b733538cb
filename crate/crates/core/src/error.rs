use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeded: {what} requires {required}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: String,
        budget: String,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A closed form has a vanishing denominator at these arguments.
    #[error("closed form `{formula}` is singular at {at}; use the exact oracle instead")]
    Singular { formula: &'static str, at: String },

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("insufficient replicates: need at least {needed}, got {got}")]
    InsufficientReplicates { needed: u64, got: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
