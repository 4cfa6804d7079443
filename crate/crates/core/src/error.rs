use thiserror::Error;

/// Scalars observed at a state when the CLF implication is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witnesses {
    pub f_phi: f64,
    pub g_phi: f64,
    pub bracket_phi: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value while evaluating {0}")]
    Numerics(&'static str),

    #[error("trajectory blew up after t = {last_finite_t}")]
    Blowup { last_finite_t: f64 },

    #[error("control schedule has zero total duration")]
    EmptySchedule,

    #[error("invalid schedule segment: {0}")]
    InvalidSegment(String),

    #[error("CLF implication fails: fΦ = {}, gΦ = {}, [f,g]Φ = {}", .0.f_phi, .0.g_phi, .0.bracket_phi)]
    ClfConditionViolated(Witnesses),

    #[error("control authority |gΦ| = {g_phi} is below tolerance {tol}")]
    AuthorityTooSmall { g_phi: f64, tol: f64 },

    #[error("bracket witness |[g,f]Φ| = {bracket_phi} is below tolerance {tol}")]
    BracketTooSmall { bracket_phi: f64, tol: f64 },

    #[error("no decreasing dwell found after {halvings} halvings")]
    NoDecreaseFound { halvings: usize },

    #[error("no motion primitive achieved the required decrease")]
    NoPrimitiveFound,

    #[error("interpolant chain is not strict at s = {s}")]
    ChainViolation { s: f64 },

    #[error("not a class-K function: {0}")]
    NotClassK(String),

    #[error("value {value} is outside the range of a bounded class-K function (sup ≈ {sup})")]
    OutOfRange { value: f64, sup: f64 },

    #[error("system shape mismatch: {0}")]
    Shape(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
