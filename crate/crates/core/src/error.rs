use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("scalar field mismatch: {0}")]
    Field(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("frame has no vectors")]
    EmptyFrame,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("family is rank deficient (smallest frame-operator eigenvalue {min_eigenvalue:e})")]
    Rank { min_eigenvalue: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("flatness condition failed: worst density {worst_density} < required {required}")]
    Flatness { worst_density: f64, required: f64 },

    #[error("search failed: {0}")]
    Search(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
