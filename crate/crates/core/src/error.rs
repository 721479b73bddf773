use thiserror::Error;

/// Errors raised by the compilation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("block structure differs between independent samples: {first:?} vs {second:?} (tolerance too tight?)")]
    Nondeterministic {
        first: Vec<usize>,
        second: Vec<usize>,
    },

    #[error("columns of block {block} span dimension {found}, expected {expected}; input is singular")]
    Singular {
        block: usize,
        expected: usize,
        found: usize,
    },

    #[error("irrep assignment mismatch: {0}")]
    Assignment(String),

    #[error("coefficient reconstruction residual {residual:.3e} exceeds {tol:.1e}")]
    Inconsistent { residual: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
