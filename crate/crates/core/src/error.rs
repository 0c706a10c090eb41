use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arm set: {0}")]
    InvalidArmSet(String),

    #[error("arm set does not span R^{dim} (rank {rank})")]
    NonSpanning { rank: usize, dim: usize },

    #[error("simplex exceeded {cap} iterations (basis {basis:?})")]
    LpIterationLimit { cap: usize, basis: Vec<usize> },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("matrix is singular or not positive definite (eigenvalue estimate {eigenvalue:e})")]
    Singular { eigenvalue: f64 },

    #[error("hull oracle requires non-collinear points: {0}")]
    Collinear(String),

    #[error("pair ({0}, {1}) is not an adjacent pair of the arm set")]
    NotAdjacent(usize, usize),

    #[error("horizon {0} is odd; two-phase constructions need an even horizon")]
    OddHorizon(usize),

    #[error("budget {budget} is below the minimum {min}")]
    BudgetTooSmall { budget: usize, min: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("best arm is not unique (top value shared by arms {0} and {1})")]
    NonUniqueBest(usize, usize),

    #[error("min-gap {gap:e} is not positive or is below the required {required:e}")]
    GapTooSmall { gap: f64, required: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A post-hoc guarantee failed; indicates a bug in the producing routine.
    #[error("internal check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
