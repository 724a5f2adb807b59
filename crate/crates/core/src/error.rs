use thiserror::Error;

/// Errors raised by chain validation and by the duality computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("state space must have at least two states, got {0}")]
    TooFewStates(usize),

    #[error("target index {target} out of range for {n} states")]
    TargetOutOfRange { target: usize, n: usize },

    #[error("row {row} is not stochastic: {reason}")]
    NonStochastic { row: usize, reason: String },

    #[error("row {row} is not a valid generator row: {reason}")]
    InvalidGenerator { row: usize, reason: String },

    #[error("initial law invalid: {0}")]
    InvalidInitial(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target state {target} is not accessible from state {from}")]
    TargetNotAccessible { target: usize, from: usize },

    #[error("target state {0} is not absorbing")]
    TargetNotAbsorbing(usize),

    #[error("chain is not upward skip-free: jump {from} -> {to}")]
    NotSkipFree { from: usize, to: usize },

    #[error("superdiagonal entry at ({index}, {}) is zero", index + 1)]
    ZeroSuperdiagonal { index: usize },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("uniformization rate {theta} is below max exit rate {required}")]
    ThetaTooSmall { theta: f64, required: f64 },

    #[error("eigenvalue iteration failed: {0}")]
    EigenFailure(String),

    #[error("link matrix is not stochastic (min entry {min_entry:e})")]
    NotStochasticLink { min_entry: f64 },

    #[error("complex arithmetic left imaginary residue {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("generating function has a pole at or inside u = {0}")]
    PoleAtU(String),

    #[error("reversal is not stochastically monotone: rows {0} and {1}")]
    MonotoneHypothesisFails(usize, usize),

    #[error("separation minimizer is state {state} instead of the target at t = {t}")]
    SeparationArgmin { t: usize, state: usize },

    #[error("CDF did not reach 1 - 1e-9 within the horizon of {0} steps")]
    Horizon(u64),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("operation requires a {expected}-time law")]
    TimeDomain { expected: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
