use std::fmt;
use std::path::PathBuf;

/// One bad line of a JSON Lines input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "line {} (id `{}`): {}", self.line, id, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("taxonomy: {0}")]
    Taxonomy(String),
    #[error("{0}")]
    Row(RowError),
    #[error("{} bad rows; first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),
    #[error("sample `{id}` missing from {file}")]
    MissingSample { id: String, file: &'static str },
    #[error("line {line}: expected id `{expected}`, found `{found}`")]
    IdMismatch {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Core(#[from] ovmer_core::Error),
    #[error("{0}")]
    Train(#[from] ovmer_core::TrainFailure),
}

impl Error {
    /// Stable machine-readable category for the CLI's error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
            Error::Taxonomy(_) => "taxonomy",
            Error::Row(_) | Error::Rows(_) => "data",
            Error::MissingSample { .. } | Error::IdMismatch { .. } => "alignment",
            Error::Checkpoint(_) => "checkpoint",
            Error::Core(ovmer_core::Error::InvalidConfig { .. }) => "validation",
            Error::Core(_) => "data",
            Error::Train(_) => "training",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
