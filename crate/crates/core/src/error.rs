use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("uniform variate {0} is outside the open interval (0, 1)")]
    UniformOutOfRange(f64),

    #[error("sample set is empty")]
    EmptySample,

    #[error("estimator is undefined: {0}")]
    UndefinedEstimator(String),

    #[error("numerical integration failed: {0}")]
    Quadrature(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("iterate diverged at step {step}")]
    Diverged { step: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("inconsistent measure: {0}")]
    InconsistentMeasure(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("bracket failure: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
