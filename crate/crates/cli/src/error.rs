use thiserror::Error;

/// Failure of a CLI command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    /// Classifies a library error raised while running `stage`.
    pub fn from_core(stage: &str, e: mimicry::Error) -> Self {
        use mimicry::Error as E;
        let msg = format!("{stage}: {e}");
        match e {
            E::EmptyData | E::NonFiniteData | E::NonPositiveData(_) | E::DegenerateData(_) => {
                CliError::Data(msg)
            }
            E::InvalidArgument(_) | E::InvalidParams { .. } => CliError::Config(msg),
            _ => CliError::Numerical(msg),
        }
    }
}
