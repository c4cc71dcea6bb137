use thiserror::Error;

/// Errors raised by validation, simulation and certification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be at least 2x2, got n = {0}")]
    TooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("nonzero diagonal entry {value} at row {row}")]
    NonzeroDiagonal { row: usize, value: f64 },
    #[error("row {row} sums to 1 {deviation:+e}")]
    RowSumViolation { row: usize, deviation: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("state is not on the simplex (residual {residual:e})")]
    NotOnSimplex { residual: f64 },

    #[error("schedule has no segments")]
    EmptySchedule,
    #[error("segment {segment} has non-positive dwell time {dwell}")]
    NonPositiveDwell { segment: usize, dwell: f64 },
    #[error("segment {segment} refers to missing pool matrix {index}")]
    UnknownMatrix { segment: usize, index: usize },
    #[error("query at t = {t} lies outside the schedule horizon [{start}, {end})")]
    OutOfHorizon { t: f64, start: f64, end: f64 },
    #[error("window length must be at least 1")]
    EmptyWindow,
    #[error("window [{start}, {start}+{window}) exceeds the {segments} scheduled segments")]
    WindowOutOfHorizon {
        start: usize,
        window: usize,
        segments: usize,
    },
    #[error("matrix {index} has n = {actual}, expected {expected}")]
    PoolDimensionMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("pool matrix {matrix_index} is not doubly stochastic")]
    NotDoublyStochastic { matrix_index: usize },

    #[error("Newton solve did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("equilibrium solve collapsed onto vertex e_{0}")]
    ConvergedToVertex(usize),
    #[error("no root of v - v^2 = {c} satisfies the interval constraints")]
    NoFeasibleRoot { c: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("state left the simplex at t = {t} (violation {violation:e})")]
    SimplexBlowup { t: f64, violation: f64 },

    #[error("invalid certificate parameter: {0}")]
    InvalidParameter(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("trajectory ends at {end} but t = {required} is needed")]
    InsufficientHorizon { required: f64, end: f64 },

    #[error("scenario generation failed after {0} attempts")]
    GenerationFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
