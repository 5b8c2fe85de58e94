use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coefficient profile: {0}")]
    InvalidProfile(String),

    #[error("b/a is not integrable near x = 0 (tail of the weight quadrature does not converge: {tail:.3e})")]
    DriftNotIntegrable { tail: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("field length {found} does not match mesh with {expected} nodes")]
    MeshMismatch { expected: usize, found: usize },

    #[error("field violates the Dirichlet condition at node {node} (value {value:e})")]
    BoundaryViolation { node: usize, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("tridiagonal solve broke down: {0}")]
    LinearSolve(String),

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("control has {found} samples but the time grid has {expected}")]
    ControlLength { expected: usize, found: usize },

    #[error("trajectory does not store the states needed: {0}")]
    StatesUnavailable(String),

    #[error("conjugate gradient stagnated after {iterations} iterations (relative residual {residual:.3e})")]
    CgStagnation {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
