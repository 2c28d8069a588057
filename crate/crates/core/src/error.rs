use thiserror::Error;

/// Errors raised by the shooting toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Integrator controls or run configuration failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Not enough samples to form finite differences.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A trajectory cannot be closed by reflection.
    #[error("curve not closable: |x(s1)| = {x_at_s1:e}, |theta(s1) - pi| = {theta_gap:e}")]
    NotClosable { x_at_s1: f64, theta_gap: f64 },
    /// Mesh export only exists for surfaces in three-space.
    #[error("unsupported dimension n = {0}; mesh export requires n = 2")]
    UnsupportedDimension(u32),
    /// No label change was found in the seed sweep.
    #[error("no bracket found: {0}")]
    NoBracket(String),
    /// Bisection was blocked by an undetermined classification.
    #[error("precision limit reached with bracket [{lo:.17e}, {hi:.17e}]: {reason}")]
    PrecisionLimit { lo: f64, hi: f64, reason: String },
    /// The two torus parameters were not separated by the search tolerance.
    #[error("torus parameters not distinct: {lower:.17e} vs {upper:.17e}")]
    DistinctRoots { lower: f64, upper: f64 },
    /// The integrator gave up before resolving the requested quantity.
    #[error("integration failed: {0}")]
    StepFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
