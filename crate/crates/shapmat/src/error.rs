use std::path::PathBuf;

/// Errors surfaced by the harness. The CLI maps configuration problems to
/// exit code 2 and everything else to 3.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] shapmat_core::Error),
    #[error("event {index}: {source}")]
    Event {
        index: usize,
        #[source]
        source: shapmat_core::Error,
    },
    #[error("only {0} reference entries pass the magnitude filter; need at least 2")]
    InsufficientSupport(usize),
    #[error("metric inputs disagree: {0}")]
    Shape(String),
}

impl HarnessError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        HarnessError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Parse { .. }
                | HarnessError::Core(shapmat_core::Error::InvalidConfig(_))
                | HarnessError::Core(shapmat_core::Error::InvalidBudget { .. })
        )
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
