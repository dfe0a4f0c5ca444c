use thiserror::Error;

pub type Result<T> = std::result::Result<T, SchurError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchurError {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e} exceeds {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e} below {tolerance:e})")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("matrix is singular (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },

    #[error("operator is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },

    #[error("data is not a Schur sequence (Toeplitz norm {norm})")]
    NotASchurSequence { norm: f64 },

    #[error("inconsistent data at level {level}, coefficient {index}: residual {residual:e}")]
    InconsistentData { level: usize, index: usize, residual: f64 },

    #[error("shape mismatch in {what}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        what: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("index {index} out of range (available: {available})")]
    IndexOutOfRange { index: usize, available: usize },

    #[error("parameters given after the sequence terminated at index {index}")]
    TrailingParameters { index: usize },

    #[error("degenerate tail: defect dimensions at index {index} are ({rank}, {rank_star})")]
    DegenerateTail {
        index: usize,
        rank: usize,
        rank_star: usize,
    },

    #[error("choice sequence is not terminated")]
    NotTerminated,

    #[error("point {re}+{im}i lies outside the guarded disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("the problem is not solvable")]
    NotSolvable,

    #[error("the problem has a unique solution; use the unique-solution path")]
    UniqueProblem,

    #[error("the problem does not have a unique solution")]
    NotUnique,

    #[error("value norm {norm} exceeds the Schur bound")]
    Certification { norm: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty data: {0}")]
    Empty(String),
}
