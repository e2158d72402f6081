use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large for the reference contraction path: {0}")]
    InstanceTooLarge(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("cap overflow: {0}")]
    CapOverflow(String),

    #[error("non-finite state in path {path} at step {step}: {detail}")]
    NonFiniteState {
        path: usize,
        step: usize,
        detail: String,
    },

    #[error("degenerate Monte-Carlo weights: effective sample size {ess:.1} of {n}")]
    DegenerateWeights { ess: f64, n: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
