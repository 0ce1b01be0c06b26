use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema: {0}")]
    Schema(String),

    #[error("csv header does not match schema: {0}")]
    HeaderMismatch(String),

    #[error("unparseable token {token:?} at row {row}, column {column:?}")]
    BadToken {
        row: usize,
        column: String,
        token: String,
    },

    #[error("table has no labels")]
    MissingLabels,

    #[error("class {class} has {count} members, fewer than the {needed} required")]
    ClassTooSmall {
        class: usize,
        count: usize,
        needed: usize,
    },

    #[error("table contains a single class")]
    SingleClass,

    #[error("no shared coordinates between rows")]
    NoSharedCoordinates,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("absent or non-finite cell at row {row}, column {column}")]
    NotDense { row: usize, column: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown hyperparameter {name:?} for {family}")]
    UnknownHyperparameter { family: String, name: String },

    #[error("bad value for hyperparameter {name:?}: {reason}")]
    BadHyperparameter { name: String, reason: String },

    #[error("{family} supports binary targets only, got {classes} classes")]
    BinaryOnly { family: String, classes: usize },

    #[error("smo did not converge after {iterations} iterations (kkt violation {violation:e})")]
    SvmNotConverged { iterations: usize, violation: f64 },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("rate undefined: empty denominator for {0}")]
    EmptyDenominator(&'static str),

    #[error("label {label} outside [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input or configuration rather than a
    /// failure while computing. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Stage { source, .. } | Error::Fold { source, .. } => source.is_validation(),
            Error::Schema(_)
            | Error::HeaderMismatch(_)
            | Error::BadToken { .. }
            | Error::MissingLabels
            | Error::ClassTooSmall { .. }
            | Error::SingleClass
            | Error::InvalidArgument(_)
            | Error::UnknownHyperparameter { .. }
            | Error::BadHyperparameter { .. }
            | Error::BinaryOnly { .. }
            | Error::Config(_)
            | Error::Json(_) => true,
            _ => false,
        }
    }
}
