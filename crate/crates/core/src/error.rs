use thiserror::Error;

use crate::model::LeviReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("{0}")]
    LeviViolation(LeviReport),

    #[error("spectral measure is inadmissible: {0}")]
    Inadmissible(String),

    #[error("admissibility undecided: {0}")]
    Undecided(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("truncation refused: tolerance {tol:e} needs N = {needed:e} modes (limit {limit:e})")]
    TruncationRefused { tol: f64, needed: f64, limit: f64 },

    #[error("sup-bound calibration failed: D = {d} exceeds sanity cap {cap}")]
    Calibration { d: f64, cap: f64 },

    #[error("variance blow-up at probe {probe}: empirical {empirical:e} > 10 x grid oracle {oracle:e}")]
    VarianceBlowup {
        probe: usize,
        empirical: f64,
        oracle: f64,
    },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what))
    }
}
