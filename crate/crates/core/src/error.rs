use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh refinement error: {0}")]
    Refinement(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("mass threshold exceeded: rho = {rho} but the admissible range ends at {threshold}")]
    Threshold { rho: f64, threshold: f64 },

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("quadrature error at ({x}, {y}): {what}")]
    Quadrature { x: f64, y: f64, what: String },

    #[error("assembly error on triangle {triangle}: {what}")]
    Assembly { triangle: usize, what: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("eigensolver stagnated after {iterations} iterations; residuals {residuals:?}")]
    EigenStagnation { iterations: usize, residuals: Vec<f64> },

    #[error("slice too coarse: {0}")]
    TooCoarse(String),

    #[error("parse error on line {line}: {what}")]
    Parse { line: usize, what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
