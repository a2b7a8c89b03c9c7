use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The variants double as the command-line exit-code classes: configuration
/// and precondition problems exit with 2, bad data with 3, numerical failures
/// (empty instrument arms, weak first stage) with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("numerical precondition failed: {0}")]
    Numerical(String),

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Invalid(_) => 2,
            Error::Data(_) | Error::Io { .. } => 3,
            Error::Numerical(_) => 4,
        }
    }

    /// Prefixes the message while keeping the exit-code class.
    pub fn context(self, prefix: impl std::fmt::Display) -> Self {
        match self {
            Error::Config(m) => Error::Config(format!("{prefix}: {m}")),
            Error::Invalid(m) => Error::Invalid(format!("{prefix}: {m}")),
            Error::Data(m) => Error::Data(format!("{prefix}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{prefix}: {m}")),
            io @ Error::Io { .. } => io,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
