use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh file {path}: {message}")]
    MeshParse { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell {cell}: {message}")]
    DegenerateCell { cell: usize, message: String },

    #[error("singular dense system (condition estimate {condition:.3e})")]
    SingularDense { condition: f64 },

    #[error("sparse factorization failed: {0}")]
    SparseFactorization(String),

    #[error("invalid Butcher tableau: {0}")]
    InvalidTableau(String),

    #[error("newton did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    NewtonDivergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("refinement with grid size {size}, tau {tau:e}: {source}")]
    Refinement {
        size: usize,
        tau: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the nonlinear or linear solvers, as opposed to
    /// invalid input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SingularDense { .. } | Error::SparseFactorization(_) | Error::NewtonDivergence { .. } => true,
            Error::Refinement { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
