use std::io;

use thiserror::Error;

/// Errors produced anywhere in the extraction / validation / comparison pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("no parseable temporal edges in input")]
    EmptyNetwork,

    #[error("cannot split {edges} edge events into {requested} snapshots")]
    SnapshotCount { requested: usize, edges: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate factor: H row {row} is identically zero")]
    DegenerateFactor { row: usize },

    #[error("malformed {what} at line {line}: {reason}")]
    Format {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
