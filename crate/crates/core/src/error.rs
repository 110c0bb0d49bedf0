use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} for `{field}`")]
    NonFinite { field: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("system not exponentially stable: eigenvalue {eigenvalue} at mode {mode} has Re >= 0")]
    NotStable { eigenvalue: Complex64, mode: usize },

    #[error("decay maximizer not at mode 1: mode {mode} has Re = {re} > {re_first} at mode 1")]
    DominanceViolated { mode: usize, re: f64, re_first: f64 },

    #[error("root finder did not converge after {iterations} iterations (max residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("CFL violated: dt = {dt} exceeds the limit {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("invalid time grid: {0}")]
    InvalidTimes(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("energy increases beyond tolerance at sample {index} ({from:e} -> {to:e})")]
    NotMonotone { index: usize, from: f64, to: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { field, value })
    }
}
