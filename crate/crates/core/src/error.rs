use thiserror::Error;

/// Errors produced by model construction, fitting, and risk estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("too few exceedances above threshold {threshold}: {found} < {required}")]
    TooFewExceedances {
        threshold: f64,
        found: usize,
        required: usize,
    },

    #[error("too few complete blocks: {found} < {required}")]
    TooFewBlocks { found: usize, required: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("no feasible threshold candidate: {0}")]
    AllCandidatesInfeasible(String),

    #[error("optimization did not converge: {0}")]
    NonConvergence(String),

    #[error("non-integrable tail: shape {xi} >= 1")]
    NonIntegrableTail { xi: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("quantile inversion failed: {0}")]
    InversionFailure(String),

    #[error("continuity constraint unsolvable: {0}")]
    ContinuityUnsolvable(String),

    #[error("no junction point: {0}")]
    NoJunction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
