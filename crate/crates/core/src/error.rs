use thiserror::Error;

#[derive(Debug, Error)]
pub enum DerhamError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("index {index} out of range for {what} (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("family {family} is not compatible with {target}")]
    IncompatibleFamily { family: String, target: String },

    #[error("containment failure: {op} of basis function {column} on cell {cell} is not in {space}")]
    Containment {
        op: String,
        space: String,
        cell: usize,
        column: usize,
    },

    #[error("membership failure: {what} on {entity} (basis function {column})")]
    Membership {
        what: String,
        entity: String,
        column: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical backend failure: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DerhamError>;
