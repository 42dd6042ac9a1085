use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: dim {left_dim} n {left_n} vs dim {right_dim} n {right_n}")]
    GridMismatch {
        left_dim: usize,
        left_n: usize,
        right_dim: usize,
        right_n: usize,
    },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel unresolved: epsilon {epsilon} is below 2h = {min}")]
    UnresolvedKernel { epsilon: f64, min: f64 },

    #[error("kernel {family} is not available in dimension {dim}")]
    KernelDimension { family: String, dim: usize },

    #[error("nonpositive multiplier {value} at flat index {index}")]
    NonPositiveMultiplier { index: usize, value: f64 },

    #[error("no closed-form spatial kernel for {0}")]
    NoClosedForm(String),

    #[error("non-finite velocity encountered at t = {time}")]
    VelocityBlowUp { time: f64 },

    #[error("time step underflow: dt = {dt} at t = {time}")]
    DtUnderflow { dt: f64, time: f64 },

    #[error("transport problem has {atoms} atoms, limit is {limit}")]
    SizeLimit { atoms: usize, limit: usize },

    #[error("snapshot mismatch: {0}")]
    SnapshotMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("field format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
