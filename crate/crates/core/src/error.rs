use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },

    #[error("stage {stage} Hessian is not positive definite (pivot {index})")]
    StageNotPositiveDefinite { stage: usize, index: usize },

    #[error("singular triangular matrix (diagonal entry {index} is zero)")]
    SingularTriangular { index: usize },

    /// The updated matrix `LLᵀ + AΣAᵀ` lost positive definiteness at `column`.
    #[error("update is indefinite at column {column}")]
    IndefiniteUpdate { column: usize },

    #[error("degenerate reflector pivot at column {column}")]
    DegeneratePivot { column: usize },

    #[error("instance generation failed: {0}")]
    GenerationFailed(String),

    #[error("instance format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// Shift the column index of a kernel error by `offset`.
    pub(crate) fn offset_column(self, offset: usize) -> Self {
        match self {
            Error::IndefiniteUpdate { column } => Error::IndefiniteUpdate {
                column: column + offset,
            },
            Error::DegeneratePivot { column } => Error::DegeneratePivot {
                column: column + offset,
            },
            other => other,
        }
    }
}
