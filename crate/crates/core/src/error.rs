use thiserror::Error;

/// Errors raised by state construction and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^H| = {0:.3e}")]
    NotHermitian(f64),
    #[error("trace is {0:.15}, expected 1")]
    TraceNotOne(f64),
    #[error("matrix is not positive semidefinite: minimal eigenvalue {0:.6e}")]
    NotPositive(f64),
    #[error("{name} = {value} is outside {allowed}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },
    #[error("correlation matrix is degenerate (largest eigenvalue of T^T T is {0:.3e})")]
    DegenerateCorrelation(f64),
    #[error("filter annihilates the state: normalization {0:.3e} below 1e-9")]
    VanishingNorm(f64),
    #[error("invalid cap window: {0}")]
    BadWindow(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("state file: {0}")]
    StateFile(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::VanishingNorm(_) | Error::DegenerateCorrelation(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
