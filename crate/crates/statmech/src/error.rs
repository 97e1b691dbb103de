use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum StatMechError {
    /// A coupling is infinite at these parameters.
    #[error("coupling `{0}` is infinite at these parameters")]
    SingularCoupling(&'static str),
    #[error("exhaustive sum over 2^{0} configurations is too large")]
    TooLarge(usize),
    #[error("transfer matrix for L = {0} exceeds the memory budget")]
    MemoryBudget(usize),
    #[error("bond weight vanishes or diverges")]
    SingularWeight,
    #[error("operation requires q_x = q_zz = 0 and no rotations")]
    RequiresPureDynamics,
    #[error("reduction requires {0}")]
    WrongLimit(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Core(#[from] repcode::Error),
}

pub type Result<T> = std::result::Result<T, StatMechError>;
