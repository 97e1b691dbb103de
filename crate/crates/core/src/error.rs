use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    /// A parameter lies outside its allowed range.
    #[error("parameter `{0}` out of range")]
    OutOfRange(&'static str),
    /// A site or bond index does not exist on the lattice.
    #[error("invalid site or bond index {0}")]
    InvalidSite(usize),
    #[error("state has zero trace")]
    ZeroTrace,
    #[error("state has zero purity")]
    ZeroPurity,
    /// The dense representation would exceed the memory budget.
    #[error("dense representation too large: {0}")]
    MemoryBudget(String),
    #[error("too many outcomes to enumerate: 2^{0}")]
    TooManyOutcomes(usize),
    /// The state has weight outside the two-dimensional code space.
    #[error("code-space leakage {0:e} exceeds tolerance")]
    LeakageTooLarge(f64),
    /// One gate discarded more than the allowed weight.
    #[error("truncation discarded weight {0:e} in one gate")]
    TruncationBlowup(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty region")]
    EmptyRegion,
    #[error("state carries no reference qubit")]
    NoReference,
    #[error("operation requires the dense engine")]
    DenseOnly,
    #[error("code-space matrix has a vanishing diagonal")]
    ZeroDiagonal,
    #[error("empty input")]
    EmptyInput,
    #[error("weights do not sum to one (sum = {0})")]
    BadWeights(f64),
    #[error("invalid kernel dimension {0}")]
    KernelShape(usize),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
