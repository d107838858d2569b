use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] otconc::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for anything the caller can fix by changing the invocation, 3 for
    /// mathematical failures such as divergent moments.
    pub fn exit_code(&self) -> u8 {
        use otconc::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Csv(_) => 2,
            CliError::Core(
                E::InvalidParameter(_) | E::UnknownCase(_) | E::DimensionMismatch { .. },
            ) => 2,
            CliError::Core(_) => 3,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = std::result::Result<T, CliError>;
