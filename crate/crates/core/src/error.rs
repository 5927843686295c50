use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("subset budget exceeded: {vars} variables at order {order}")]
    SubsetBudget { vars: usize, order: usize },

    #[error("function has zero variance; ratio is undefined")]
    ZeroVariance,

    #[error("input leaves [0, 1]: {0}")]
    RangeViolation(String),

    #[error("degenerate denominator: z'Bz = {value:e}")]
    DegenerateDenominator { value: f64 },

    #[error("moment of order {order} is not positive")]
    ZeroMoment { order: usize },

    #[error("relaxation is infeasible: {0}")]
    Infeasible(String),

    #[error("no cone-feasible candidate (relaxation bound {sdr_objective:.6})")]
    NoFeasibleCandidate { sdr_objective: f64 },

    #[error("skew function is numerically constant on [0, 1] (range {range:e})")]
    FlatSkew { range: f64 },

    #[error("grid of {points} points exceeds budget of {budget}")]
    GridBudget { points: u128, budget: u128 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
