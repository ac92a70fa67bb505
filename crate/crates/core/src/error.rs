use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("k must be even and at least 2 (got k={0})")]
    UnsupportedArity(usize),

    #[error("probability must lie in [0, 1] (got {0})")]
    InvalidProbability(f64),

    #[error("instance has no constraints")]
    EmptyInstance,

    #[error("duplicate constraint on tuple {tuple:?}")]
    DuplicateConstraint { tuple: Vec<usize> },

    #[error("coordinate {coord} outside 1..={n}")]
    IndexOutOfRange { coord: usize, n: usize },

    #[error("sign must be +1 or -1 (got {0:?})")]
    BadSign(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("budget exceeded for {what}: need {needed}, cap {cap}")]
    BudgetExceeded { what: String, needed: u128, cap: u128 },

    #[error("dense matrix side {side} exceeds cap {cap}")]
    DenseTooLarge { side: u128, cap: u128 },

    #[error("matrix not symmetric at ({row}, {col}): |a_ij - a_ji| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("no convergence after {iterations} iterations (estimate {estimate}, residual {residual:e})")]
    NoConvergence {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, needed: u128, cap: u128) -> Self {
        Error::BudgetExceeded {
            what: what.into(),
            needed,
            cap,
        }
    }

    /// True for the budget-style failures (`BudgetExceeded`, `DenseTooLarge`).
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::DenseTooLarge { .. })
    }
}
