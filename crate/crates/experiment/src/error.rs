use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] asht_core::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{failed} acceptance criteria failed")]
    AcceptanceFailed { failed: usize },
}

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ACCEPTANCE_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const INGEST: u8 = 3;
    pub const MODEL: u8 = 4;
    pub const NUMERIC: u8 = 5;
    pub const INVALID_INPUT: u8 = 6;
    pub const IO: u8 = 7;
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use asht_core::Error as E;
        match self {
            CliError::Core(E::Ingest(_) | E::Csv(_)) => exit::INGEST,
            CliError::Core(E::Indistinguishable { .. } | E::Model(_)) => exit::MODEL,
            CliError::Core(E::NumericFailure(_) | E::RunawayTrial { .. }) => exit::NUMERIC,
            CliError::Core(E::InvalidArgument(_) | E::DegenerateInput(_)) => exit::INVALID_INPUT,
            CliError::Core(E::Io(_)) | CliError::Io(_) => exit::IO,
            CliError::Config(_) => exit::USAGE,
            CliError::AcceptanceFailed { .. } => exit::ACCEPTANCE_FAILED,
        }
    }
}
