use thiserror::Error;

/// Errors produced by the solvers and the Galerkin algebra.
#[derive(Debug, Error)]
pub enum SgError {
    #[error("invalid basis spec: {0}")]
    InvalidBasis(String),

    #[error("dimension mismatch: expected {expected} coefficients, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Galerkin matrix is singular or ill-conditioned (cond estimate {cond:.3e})")]
    SingularGalerkinMatrix { cond: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("nonpositive headway for vehicle {vehicle} at quadrature node {node} (value {value:.6e})")]
    NonPositiveHeadway {
        vehicle: usize,
        node: usize,
        value: f64,
    },

    #[error("vehicle ordering violated at t={t}: mean position of vehicle {vehicle} ({x_lower:.6}) >= vehicle {} ({x_upper:.6})", vehicle + 1)]
    OrderingViolation {
        t: f64,
        vehicle: usize,
        x_lower: f64,
        x_upper: f64,
    },

    #[error("CFL violation: dt*lambda/dx = {ratio:.4} exceeds {limit}")]
    CflViolation { ratio: f64, limit: f64 },

    #[error("density out of range at cell {cell}, quadrature node {node}: rho = {value:.6e}")]
    DensityOutOfRange {
        cell: usize,
        node: usize,
        value: f64,
    },

    #[error("hyperbolicity check failed for this basis; refusing to run the second-order system")]
    NotHyperbolic,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SgError>;
