use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Hypotheses `i` and `j` cannot be told apart by any action.
    #[error("model error: hypotheses {i} and {j} are indistinguishable under every action")]
    Indistinguishable { i: usize, j: usize },

    #[error("model error: {0}")]
    Model(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("runaway trial: no decision after {slots} slots (last leads: {trace:?})")]
    RunawayTrial { slots: u64, trace: Vec<f64> },

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn ingest(msg: impl Into<String>) -> Self {
        Error::Ingest(msg.into())
    }
}
