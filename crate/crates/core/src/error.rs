use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the toolkit.
///
/// The CLI maps each variant onto an exit code through [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric cell at row {row}, column `{column}`: {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("table has no data rows")]
    EmptyTable,

    #[error("negative bug count {0}")]
    NegativeCount(i64),

    #[error("split would leave a partition without instances of class {class}")]
    DegenerateSplit { class: u8 },

    #[error("matrix has no rows")]
    EmptyMatrix,

    #[error("width mismatch: expected {expected} features, found {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("empty input")]
    Empty,

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("model `{0}` is not differentiable; integrated gradients needs input gradients")]
    NonDifferentiableModel(&'static str),

    #[error("background set is empty")]
    EmptyBackground,

    #[error("exact Shapley enumeration supports at most {max} features, got {found}")]
    TooManyFeatures { max: usize, found: usize },

    #[error("attribution vectors have inconsistent widths")]
    InconsistentWidth,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Training,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 1,
            ErrorCategory::Data => 2,
            ErrorCategory::Training => 3,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::NonDifferentiableModel(_) => {
                ErrorCategory::Usage
            }
            Error::NonFiniteLoss { .. } => ErrorCategory::Training,
            _ => ErrorCategory::Data,
        }
    }
}
