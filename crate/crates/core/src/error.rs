use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AlqaError>;

#[derive(Debug, Error)]
pub enum AlqaError {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training failed: {0}")]
    Training(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("feature manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("corrupt data in {}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },

    #[error("format version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("labeler failed: {0}")]
    Labeler(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
