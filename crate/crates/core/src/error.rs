use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("direction is not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("zero vector has no projective class")]
    ZeroVector,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("certified transverse count {count} violates the admissible range for n = {n}")]
    ParityViolation { n: usize, count: usize },

    #[error("chi-square test needs every expected cell count >= 5 (smallest is {min_expected:.3})")]
    InsufficientCells { min_expected: f64 },

    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    #[error("structure violation: {0}")]
    StructureViolation(String),
}
