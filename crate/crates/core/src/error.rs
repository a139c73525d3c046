use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("time {t} is outside the horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("coordinate {xi} lies outside [{alpha}, {beta}] at t = {t}")]
    OutsideInterval {
        xi: f64,
        t: f64,
        alpha: f64,
        beta: f64,
    },
    #[error("domain width {width} at t = {t} is not positive")]
    SingularWidth { t: f64, width: f64 },
    #[error("invalid domain: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least {min} intervals, got {m}")]
    TooFewIntervals { m: usize, min: usize },
    #[error("expected {expected} grid values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("matrix is singular to working precision at column {column}")]
    Singular { column: usize },
    #[error("dimension mismatch: matrix of order {order}, right-hand side of length {len}")]
    DimensionMismatch { order: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    /// Successive Picard corrections stopped shrinking.
    #[error("fixed-point map is not a contraction (ratio {ratio:.3e} at iteration {iteration})")]
    ContractionFailure { iteration: usize, ratio: f64 },
    #[error("fixed point not reached in {max} iterations (last correction {last_correction:.3e})")]
    MaxPicardExceeded { max: usize, last_correction: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Failure inside [`crate::stepper::integrate`]. Carries the diagnostics
/// gathered up to the failing step so callers can still persist them.
#[derive(Debug, Clone, Error)]
#[error("step {step} (t = {t}) failed: {source}")]
pub struct IntegrateError {
    pub step: usize,
    pub t: f64,
    pub source: StepError,
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaugeError {
    #[error("gauge transform is undefined for chi = 0")]
    Degenerate,
    #[error("sampled field has {xi} coordinates but {values} values")]
    Shape { xi: usize, values: usize },
    #[error("time level {level} does not sit on the common grid")]
    Misaligned { level: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("reference run drifted by {drift:.3e} (relative), limit {limit:.1e}; reduce fine_dt")]
    Drift { drift: f64, limit: f64 },
    #[error("reference run produced a non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid oracle configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Umbrella error for the run / sweep / convergence drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Integrate(#[from] Box<IntegrateError>),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("domain admissibility violated at t = {t}: width {width}")]
    Violation { t: f64, width: f64 },
    #[error("{context}: {source}")]
    Level {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<IntegrateError> for Error {
    fn from(e: IntegrateError) -> Self {
        Error::Integrate(Box::new(e))
    }
}

impl Error {
    pub fn within(self, context: impl Into<String>) -> Self {
        Error::Level {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost step failure, if any.
    pub fn step_error(&self) -> Option<&StepError> {
        match self {
            Error::Integrate(e) => Some(&e.source),
            Error::Level { source, .. } => source.step_error(),
            _ => None,
        }
    }
}
