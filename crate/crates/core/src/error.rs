use thiserror::Error;

/// Errors raised by the simulator, the gradient evaluators and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QrnnError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("input {value} is outside the encodable range [-1, 1]")]
    Domain { value: f64 },

    #[error("matrix is not unitary (max deviation of U^dag U from I is {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("parameter vector has length {actual}, architecture needs {expected}")]
    ParameterLength { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for a {n}-qubit register")]
    QubitIndex { index: usize, n: usize },

    #[error("objective returned a non-finite value at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },

    #[error("Lindblad integration failed at t = {time}: {reason}; try more substeps")]
    Integration { time: f64, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QrnnError>;
