use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate cloud: {0}")]
    DegenerateCloud(String),
    #[error("row {row} of the affinity matrix sums to zero")]
    ZeroRow { row: usize },
    #[error("eigensolver did not converge (residual norm {residual:e})")]
    ConvergenceFailure { residual: f64 },
    #[error("region is empty")]
    EmptyRegion,
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("invalid surface parameters: {0}")]
    InvalidSurfaceParams(String),
    #[error("feature matrix is rank deficient (rank {rank} < {cols}) and ridge is zero")]
    RankDeficient { rank: usize, cols: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("non-finite loss in batch {batch}")]
    NonFiniteLoss { batch: usize },
    #[error(
        "locality not reached after {halvings} radius halvings (outlier fraction {fraction:.3})"
    )]
    LocalityFailure { halvings: usize, fraction: f64 },
    #[error("objective returned a non-finite value at sample {index}")]
    NonFiniteValue { index: usize },
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front-end: 2 for validation
    /// failures, 3 for numeric failures. I/O problems count as validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConvergenceFailure { .. }
            | Error::DegenerateVariance(_)
            | Error::RankDeficient { .. }
            | Error::NonFiniteLoss { .. }
            | Error::LocalityFailure { .. }
            | Error::NonFiniteValue { .. }
            | Error::ZeroRow { .. } => 3,
            _ => 2,
        }
    }
}
