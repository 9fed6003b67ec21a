use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("placement failed after {attempts} attempts: {constraint}")]
    Placement { constraint: String, attempts: usize },

    #[error("invalid MCS table: {0}")]
    McsTable(String),

    #[error("unknown slice {slice} (scheme has {slice_count} slices)")]
    UnknownSlice { slice: usize, slice_count: usize },

    #[error("state space too large: {count} candidates exceed cap {cap}")]
    StateSpaceTooLarge { count: u64, cap: u64 },

    #[error("unknown override key `{0}`")]
    UnknownOverride(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
