use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Training data contains a single class.
    #[error("training data is missing class {missing:+}")]
    MissingClass { missing: i8 },

    #[error("singular data: {0}")]
    SingularData(String),

    #[error("solver did not converge after {iterations} iterations (duality gap {gap:e})")]
    Convergence { iterations: usize, gap: f64 },

    #[error("no hypothesis in the grid disagrees with the current hypothesis on the candidate")]
    DegenerateGrid,

    #[error("cell {0} has no surviving repetitions")]
    EmptyCell(String),

    #[error("cannot open {path}: {source}")]
    MissingFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: only one label value present ({value:?})")]
    SingleClass { path: PathBuf, value: String },

    #[error("{path}:{line}: column {column:?} has undeclared category {value:?}")]
    UnknownCategory {
        path: PathBuf,
        line: usize,
        column: String,
        value: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Failures that mark a repetition as unusable rather than aborting a run.
    pub fn is_droppable(&self) -> bool {
        matches!(
            self,
            Error::MissingClass { .. } | Error::SingularData(_) | Error::Convergence { .. }
        )
    }
}
