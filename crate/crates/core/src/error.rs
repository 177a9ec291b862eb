use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A model could not be evaluated at the given parameter, typically a
    /// covariance matrix that failed to factorize.
    #[error("model error at theta = {theta:?}: {reason}")]
    Model { theta: Vec<f64>, reason: String },

    #[error("unsupported dimension {dim} (maximum {max})")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("non-finite estimator output for evaluation row {row}")]
    Evaluation { row: usize },

    #[error("quadrature did not converge: {0}")]
    OracleFailure(String),

    #[error("sampler failure: {0}")]
    SamplerFailure(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn model(theta: &[f64], reason: impl Into<String>) -> Self {
        Error::Model {
            theta: theta.to_vec(),
            reason: reason.into(),
        }
    }
}
