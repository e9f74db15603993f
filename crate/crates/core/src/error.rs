use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("size error: total dimension {dim} exceeds cap {cap}")]
    Size { dim: usize, cap: usize },

    #[error("operator is not Hermitian (max |X - X*| = {deviation:.3e})")]
    Hermiticity { deviation: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("vector is not supported on the antisymmetric subspace (|P_sym v| = {residual:.3e})")]
    Support { residual: f64 },

    #[error("epsilon {eps} outside regime {regime} (max {max})")]
    Regime { eps: f64, regime: String, max: f64 },

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator Schmidt rank {rank} not supported: {reason}")]
    Rank { rank: usize, reason: String },

    #[error("normal form failed: {0}")]
    NormalForm(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("malformed input {path}: {message} (byte offset {offset})")]
    Parse {
        path: String,
        offset: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Malformed, unreadable or out-of-domain input, as opposed to an input
    /// that was read correctly but failed a mathematical check.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Shape(_)
                | Error::Size { .. }
                | Error::Hermiticity { .. }
                | Error::Degenerate(_)
                | Error::Regime { .. }
                | Error::UnsupportedDimension { .. }
                | Error::Domain(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}
