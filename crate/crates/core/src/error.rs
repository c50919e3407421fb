use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh level {level} exceeds the supported maximum {max} (entity indices are u32)")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("cell {cell} is degenerate (signed volume {volume:e})")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("finite element spaces are defined on different meshes")]
    MeshMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix{}", pivot.map(|p| format!(" (zero pivot at {p})")).unwrap_or_default())]
    SingularMatrix { pivot: Option<usize> },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("operator is not positive definite: curvature {curvature:e} at CG iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("preconditioner step {step} failed: {source}")]
    InnerSolve {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("inner solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("dense problem of size {size} exceeds the cap {cap}")]
    TooLargeForDense { size: usize, cap: usize },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
