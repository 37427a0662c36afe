use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sigma excluded: the order sigma = 1 is not part of the mixed operator family")]
    SigmaExcluded,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lifespan exponent undefined: p = {p} is not below p_crit = {p_crit}")]
    LifespanUndefined { p: f64, p_crit: f64 },

    #[error("quadrature did not converge (estimated error {estimate:e}, value {value:e})")]
    QuadratureNotConverged { estimate: f64, value: f64 },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("experiment invalid: {0}")]
    InvalidExperiment(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
