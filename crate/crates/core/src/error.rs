use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionError(String),

    #[error("Hamiltonian is not Hermitian (max deviation {deviation:e})")]
    InvalidHamiltonian { deviation: f64 },

    #[error("invalid expansion order {order}: {reason}")]
    InvalidOrder { order: usize, reason: String },

    #[error("I - Sigma(t) is singular at t = {time} (relative determinant {relative_det:e})")]
    SingularGenerator { time: f64, relative_det: f64 },

    #[error("reference inverse does not exist: I - Sigma is singular (smallest singular value {smallest:e})")]
    SingularReference { smallest: f64 },

    #[error("non-finite state detected at t = {time}")]
    DivergenceDetected { time: f64 },

    #[error("capacity exceeded: {0}")]
    CapacityError(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
