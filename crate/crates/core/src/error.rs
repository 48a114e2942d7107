use std::io;

/// Errors produced by the structret library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("color count {colors} does not match point count {points}")]
    ColorCountMismatch { points: usize, colors: usize },

    #[error("invalid cluster count k={k} for a cloud of {points} points")]
    InvalidClusterCount { k: usize, points: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point count mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("query has no points")]
    EmptyQuery,

    #[error("database has no entries")]
    EmptyDatabase,

    #[error("lambda mismatch: database uses {database}, query uses {query}")]
    LambdaMismatch { database: f64, query: f64 },

    #[error("unsupported database format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("duplicate entry id `{0}`")]
    DuplicateEntry(String),

    #[error("database integrity check failed: {0}")]
    Integrity(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
