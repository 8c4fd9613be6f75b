use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A margin or stratum needed by a measure is empty or constant.
    #[error("degenerate table: {margin} {reason}")]
    DegenerateTable { margin: String, reason: String },

    #[error("predictors X and W are collinear (|r(W,X)| = 1)")]
    CollinearPredictors,

    #[error("X-Y association is negative (RD_XY = {0}); relabel the levels of X")]
    NegativeAssociation(f64),

    #[error(
        "rejection budget exceeded: {rejected} rejections after accepting {accepted} of {target} tables"
    )]
    RejectionBudgetExceeded {
        accepted: u64,
        target: u64,
        rejected: u64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse table: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn degenerate(margin: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::DegenerateTable {
            margin: margin.into(),
            reason: reason.into(),
        }
    }
}
