use thiserror::Error;

/// Errors raised by the tracking library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("state {state} out of range 0..={max}")]
    StateOutOfRange { state: usize, max: usize },

    #[error("time {time} out of range 0..{horizon}")]
    TimeOutOfRange { time: usize, horizon: usize },

    #[error("invalid cost model: {0}")]
    InvalidModel(String),

    #[error("degenerate cost model: c_u and c_l are both zero")]
    DegenerateModel,

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix parse error on line {line}: {message}")]
    MatrixParse { line: usize, message: String },

    #[error("invalid threshold {0}: must lie in [0, 1]")]
    InvalidThreshold(f64),

    #[error("invalid resolution {0}: must lie in (0, 1]")]
    InvalidResolution(f64),

    #[error("sequence length {actual} does not match expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("taboo query uses {steps} steps but the floor sequence has length {floor_len}")]
    StepsExceedFloor { steps: usize, floor_len: usize },

    #[error("policy table has no entry for anchor ({state}, {time})")]
    MissingAnchor { state: usize, time: usize },

    #[error("policy table has no initial-belief sequence")]
    MissingInitialSequence,

    #[error("policy table shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("partial observation has zero probability under the current belief")]
    ZeroProbabilityBranch,

    #[error(
        "exhaustive search needs {required:.3e} sequence evaluations, budget is {budget:.3e}"
    )]
    BudgetExceeded { required: f64, budget: f64 },

    #[error("simulation needs at least one path")]
    NoPaths,

    #[error("trace export failed: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, TrackError>;
