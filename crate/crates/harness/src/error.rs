use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] neuralbayes::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("orchestration error: {0}")]
    Orchestration(String),
    #[error("reproduction mismatch: {0}")]
    Reproduction(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 4 when a re-run does not reproduce its manifest.
    pub fn exit_code(&self) -> i32 {
        use neuralbayes::Error as E;
        match self {
            HarnessError::Reproduction(_) => 4,
            HarnessError::Core(
                E::Domain(_)
                | E::Model { .. }
                | E::TrainingDiverged { .. }
                | E::Evaluation { .. }
                | E::OracleFailure(_)
                | E::SamplerFailure(_),
            ) => 3,
            _ => 2,
        }
    }
}
