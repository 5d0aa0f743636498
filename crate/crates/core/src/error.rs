use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("kernel has no declared piecewise structure")]
    UnsupportedKernel,
    #[error("divergent integral: {0}")]
    Divergence(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e} after {evaluations} evaluations")]
    Tolerance {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
    #[error("functional error: {0}")]
    Functional(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("regime violation: {0}")]
    Regime(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{source} (n = {n}, replication = {replication}, seed = {seed})")]
    Replication {
        n: usize,
        replication: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
