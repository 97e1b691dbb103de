use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ContinuumError {
    #[error("Hilbert space of {0} qubits exceeds the memory budget")]
    MemoryBudget(usize),
    #[error("λ_x + λ_zz must be positive")]
    DegenerateDenominator,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("coupling `{0}` is not defined for this kind")]
    UnknownCoupling(String),
    #[error("missing coupling `{0}`")]
    MissingCoupling(String),
    #[error("coupling `{0}` has the wrong shape")]
    CouplingShape(String),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("parameter `{0}` out of range")]
    OutOfRange(&'static str),
    #[error("kernel lies outside the measured-operator algebra (residual {0:e})")]
    OutsideAlgebra(f64),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error(transparent)]
    Core(#[from] repcode::Error),
}

pub type Result<T> = std::result::Result<T, ContinuumError>;
