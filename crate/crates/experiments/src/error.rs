use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Invalid configuration, with the offending field first.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("analytic oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error(transparent)]
    Core(#[from] htsgd_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

pub(crate) fn config_err(field: &str, reason: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(format!("{field}: {reason}"))
}
