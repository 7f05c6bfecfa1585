use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("non-finite {quantity} produced at fine step {step}")]
    NumericOverflow { step: usize, quantity: &'static str },

    #[error(
        "exact enumeration refused: C({k}, {l}) = {count} subsets per window exceeds the \
         enumeration limit; set a subset budget to sample instead"
    )]
    SubsetRefused { k: usize, l: usize, count: u128 },

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for configuration or user input errors, 2 for
    /// I/O failures and 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_)
            | Error::Domain(_)
            | Error::OutOfRange(_)
            | Error::SubsetRefused { .. }
            | Error::Parse { .. } => 1,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::NumericOverflow { .. } => 3,
            Error::Replication { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
