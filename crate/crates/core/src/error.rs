use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("invalid facet: {0}")]
    InvalidFacet(String),
    #[error("field does not live on the requested facet: {0}")]
    DomainMismatch(String),
    #[error("no admissible Cahn-Hoffman field: {0}")]
    Infeasible(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("profile is not monotone: {0}")]
    NonMonotone(String),
    #[error("implicit step failed: {0}")]
    StepTooLarge(String),
    #[error("energy increased by {increase:e} at step {step}")]
    EnergyIncrease { step: usize, increase: f64 },
    #[error("invalid initial data: {0}")]
    InvalidInit(String),
    #[error("configuration error: {0}")]
    ConfigError(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
