use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Format { path: PathBuf, line: u64, message: String },

    #[error(transparent)]
    Compute(#[from] homsim_core::Error),

    #[error("{0} report row(s) outside tolerance")]
    Tolerance(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), line, message: message.into() }
    }

    /// Process exit status; 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } | CliError::Format { .. } => 4,
            CliError::Tolerance(_) => 5,
            CliError::Compute(_) => 1,
        }
    }
}
