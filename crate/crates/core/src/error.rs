use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {n} observations for {p} basis functions")]
    InsufficientData { n: usize, p: usize },

    #[error("duplicate decisions at rows {first} and {second}")]
    DuplicateDecision { first: usize, second: usize },

    #[error("correlation matrix ill-conditioned at theta = {theta:?} (jitter exhausted at {max_jitter:e})")]
    IllConditioned { theta: Vec<f64>, max_jitter: f64 },

    #[error("no valid likelihood evaluation among {starts} starts")]
    NoValidStart { starts: usize },

    #[error("slice sampler stalled on coordinate {coordinate} after {attempts} shrinkage steps")]
    SamplingStalled { coordinate: usize, attempts: usize },

    #[error("gradient undefined at zero prediction variance")]
    UndefinedGradient,

    #[error("acquisition failed: no candidate produced a finite score")]
    AcquisitionFailed,

    #[error("objective evaluation failed: {0}")]
    EvaluationFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the surrogate model (as opposed to the objective or I/O).
    pub fn is_model_failure(&self) -> bool {
        matches!(
            self,
            Error::InsufficientData { .. }
                | Error::DuplicateDecision { .. }
                | Error::IllConditioned { .. }
                | Error::NoValidStart { .. }
                | Error::SamplingStalled { .. }
                | Error::UndefinedGradient
                | Error::AcquisitionFailed
        )
    }
}
