use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature did not converge: {0}")]
    NonIntegrable(String),
    #[error("weight function below 1 at x = {at}: W = {value}")]
    InvalidWeight { at: f64, value: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("dimension error: expected d = {expected}, got d = {got}")]
    DimensionError { expected: usize, got: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("linear program failure: {0}")]
    SolverFailure(String),
    #[error("size limit exceeded: {rows}x{cols} (max {max}x{max})")]
    SizeLimit { rows: usize, cols: usize, max: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("integral of 1/f diverges at zero: {0}")]
    DivergentIntegral(String),
    #[error("time grid too coarse: {points} points in [0, {t}] (need at least {min})")]
    GridTooCoarse { points: usize, t: f64, min: usize },
    #[error("root not bracketed on [{lo}, {hi}]: F(lo) = {f_lo}, F(hi) = {f_hi}")]
    RootNotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("evaluation error at x = {x}, t = {t}: {msg}")]
    EvaluationError { x: f64, t: f64, msg: String },
    #[error("Gronwall bound blows up (bound is +inf): {0}")]
    BoundBlowup(String),
    #[error("unstable scheme: {0}")]
    UnstableScheme(String),
    #[error("particle blow-up at t = {time}")]
    BlowUp { time: f64 },
    #[error("flow time grids do not match: {0}")]
    GridMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error at offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
