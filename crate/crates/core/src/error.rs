use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("no positive eigenvalue: the distance matrix is degenerate or constant")]
    AllEigenvaluesNonpositive,

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no feasible solution for target score {target:?}: {detail}")]
    NoFeasibleSolution { target: Vec<f64>, detail: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("weight {0} outside the allowed range [-0.1, 1.1]")]
    InvalidWeight(f64),

    #[error("all curves are identically zero")]
    AllZeroCurves,

    #[error("tangent vectors have different poles")]
    PoleMismatch,

    #[error("zero denominator in F statistic")]
    ZeroDenominator,

    #[error("total sum of squares is zero (constant response)")]
    ZeroTss,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for validation problems, 3 when
    /// backscoring found no feasible solution.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoFeasibleSolution { .. } => 3,
            _ => 2,
        }
    }
}
