use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("numeric failure at token {token_index}: {detail}")]
    Numeric { token_index: usize, detail: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("non-deterministic evaluation: {0}")]
    Reproducibility(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("validation error for instance {id}: {detail}")]
    Validation { id: String, detail: String },

    #[error("alignment error for instance {id}: {detail}")]
    Alignment { id: String, detail: String },

    #[error("format error at line {line}: {detail}")]
    Format { line: usize, detail: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
