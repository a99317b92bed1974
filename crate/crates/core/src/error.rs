//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by graph ingestion, dataset loading, configuration, and
/// the disambiguation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A malformed line in an edge, metadata, pairs, or predictions file.
    #[error("{path}:{line}: {message}")]
    Ingestion {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A dataset record that parses but violates the schema.
    #[error("{path}:{line}: field `{field}`: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    /// Inconsistent data discovered after parsing (cross-record checks,
    /// override validation, mention/prediction mismatches).
    #[error("validation: {0}")]
    Validation(String),

    /// Invalid configuration (weights, thresholds, enum names, flag values).
    #[error("config: {0}")]
    Config(String),

    /// A caller violated an operation precondition (non-finite scores,
    /// empty lists where nonempty is required).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A snapshot file with a bad magic, version, or truncated payload.
    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
