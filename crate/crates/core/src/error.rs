use thiserror::Error;

/// Errors surfaced by mesh construction, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("memory budget exceeded while building level {level} ({bytes} bytes requested)")]
    ResourceExhausted { level: usize, bytes: usize },

    #[error("degenerate cell {cell}: measure {measure:e}")]
    DegenerateCell { cell: usize, measure: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    LinearSolver { residual: f64, iterations: usize },

    #[error("eigensolver did not converge: relative residual {residual:e} after {iterations} iterations")]
    EigenSolver { residual: f64, iterations: usize },

    #[error("self-consistent iteration diverged after {iterations} iterations (lambda = {lambda})")]
    ScfDiverged { iterations: usize, lambda: f64 },

    #[error("no quadrature rule exact to degree {degree} in dimension {dim}")]
    QuadratureUnavailable { dim: usize, degree: usize },

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Error {
        match self {
            e @ Error::AtLevel { .. } => e,
            e => Error::AtLevel {
                level,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
