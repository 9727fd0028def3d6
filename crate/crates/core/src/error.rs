//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide error; each variant names the violated invariant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("not PSD (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("trace not 1 (got {trace})")]
    TraceNotOne { trace: f64 },
    #[error("unknown label: {label}")]
    UnknownLabel { label: String },
    #[error("duplicate label: {label}")]
    DuplicateLabel { label: String },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("zero vector")]
    ZeroVector,
    #[error("spectrum not ±1 (|O² − I| = {deviation:e})")]
    SpectrumNotDichotomic { deviation: f64 },
    #[error("POVM elements do not sum to identity (max deviation {deviation:e})")]
    PovmIncomplete { deviation: f64 },
    #[error("filter contraction violated (top eigenvalue of M†M is {top_eigenvalue})")]
    ContractionViolated { top_eigenvalue: f64 },
    #[error("zero success probability")]
    ZeroSuccessProbability,
    #[error("Kraus completeness violated (max deviation {deviation:e})")]
    KrausIncomplete { deviation: f64 },
    #[error("not a projector (max deviation {deviation:e})")]
    NotAProjector { deviation: f64 },
    #[error("outcome {outcome} out of range (outcome count {count})")]
    OutcomeOutOfRange { outcome: usize, count: usize },
    #[error("strategy index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("vertex count {vertices} exceeds cap {cap}")]
    VertexCapExceeded { vertices: u128, cap: u128 },
    #[error("mixture weight out of range (got {weight}, need 0 < w ≤ 1)")]
    WeightOutOfRange { weight: f64 },
    #[error("input behavior is local")]
    BehaviorIsLocal,
    #[error("no escaping vertex found (numerical-tolerance failure)")]
    NoEscapingVertex,
    #[error("aggregate behavior is local")]
    AggregateBehaviorLocal,
    #[error("no nonlocal branch (numerical failure)")]
    NoNonlocalBranch,
    #[error("composed-space dimension {dim} exceeds cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
