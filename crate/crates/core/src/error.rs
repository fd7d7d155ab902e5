use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("label column {0} not found")]
    MissingLabelColumn(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {class} has no training samples")]
    ClassCoverage { class: usize },

    #[error("classes {0} and {1} have coincident means (relevance weight undefined)")]
    DuplicateClassMeans(usize, usize),

    #[error("infinite dissimilarity weight between classes {0} and {1}")]
    InfiniteDissimilarity(usize, usize),

    #[error("degenerate class pair ({0}, {1}): discriminant criterion is zero")]
    DegenerateClassPair(usize, usize),

    #[error("no between-class signal")]
    NoBetweenClassSignal,

    #[error("class {class}: {source}")]
    InClass {
        class: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mismatched keys: {0}")]
    MismatchedKeys(String),

    #[error("unknown variant selector {0:?}")]
    UnknownVariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_class(class: usize, source: Error) -> Self {
        Error::InClass {
            class,
            source: Box::new(source),
        }
    }
}
