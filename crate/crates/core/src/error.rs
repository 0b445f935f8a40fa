use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("AP count {0} is not a perfect square")]
    NonSquareApCount(usize),

    #[error("shadow covariance is not positive definite even with jitter {jitter:e}")]
    CholeskyFailure { jitter: f64 },

    #[error("Clarke autocorrelation J0({arg}) = {value} is negative")]
    NegativeAutocorrelation { arg: f64, value: f64 },

    #[error("finite ensemble would have {outcomes} outcomes (limit {limit})")]
    EnsembleTooLarge { outcomes: f64, limit: usize },

    #[error("stage matrix is numerically singular ({what}, condition number {cond:e})")]
    SingularStage { what: &'static str, cond: f64 },

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("at least {needed} samples required, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{skipped} of {total} realizations failed (more than 1%)")]
    TooManySkips { skipped: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
