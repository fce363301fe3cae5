use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: line {line} has {found} cells, header has {expected}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: header mismatch with previously loaded files")]
    HeaderMismatch { path: PathBuf },

    #[error("missing `{column}` column in {source_name}")]
    MissingLabel { column: String, source_name: String },

    #[error("unparseable cell {value:?} in column `{column}` at data row {row}")]
    BadCell {
        column: String,
        row: usize,
        value: String,
    },

    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),

    #[error("dataset is already normalized")]
    AlreadyNormalized,

    #[error("dataset has no attack rows")]
    NoAttackRows,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("labels contain a single class; both classes are required")]
    SingleClass,

    #[error("class {label} has {count} rows; stratified split needs at least 2")]
    ClassTooSmall { label: u8, count: usize },

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    Dimension {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("index {index} out of range for {len} features")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("non-finite {what} at epoch {epoch}")]
    Diverged { what: &'static str, epoch: usize },

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("unknown method `{0}` (expected one of mi, chi2, anova, rfe, rf)")]
    UnknownMethod(String),

    #[error("malformed document {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("required artifact {0} not found; run the earlier stage first")]
    MissingArtifact(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for usage or configuration
    /// problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingLabel { .. }
            | Error::Config(_)
            | Error::UnknownMethod(_)
            | Error::MissingArtifact(_)
            | Error::HeaderMismatch { .. } => 2,
            _ => 1,
        }
    }
}
