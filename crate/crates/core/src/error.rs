use std::path::PathBuf;

use thiserror::Error;

use crate::metrics::Statistic;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("column `{column}` not found in header")]
    MissingColumn { column: String },

    #[error("row {row}, column `{column}`: empty value")]
    EmptyCell { row: usize, column: String },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Unparseable { row: usize, column: String, value: String },

    #[error("row {row}, column `{column}`: {message}")]
    InvalidValue {
        row: usize,
        column: String,
        message: String,
    },

    #[error("fewer than 2 groups (found {found})")]
    TooFewGroups { found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("training data contains a single label value ({label})")]
    SingleClass { label: u8 },

    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("feature dimension mismatch: scorer expects {expected}, data has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("policy has no threshold for group {group}")]
    MissingGroup { group: usize },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("infeasible constraint: {reason}")]
    Infeasible {
        /// Display name of the group that cannot satisfy the constraint, when one can be named.
        blocking_group: Option<String>,
        reason: String,
    },

    #[error("{statistic} is undefined for every candidate policy")]
    AllUndefined { statistic: Statistic },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
