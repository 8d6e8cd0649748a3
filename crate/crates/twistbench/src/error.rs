use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("locality violation: gate {gate} spans distance {distance} > radius {radius}")]
    Locality {
        gate: String,
        distance: usize,
        radius: usize,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("capacity exceeded: {requested} qubits > cap {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("frustrated projector family: no common ground state")]
    Frustrated,
}

pub type Result<T> = std::result::Result<T, Error>;
