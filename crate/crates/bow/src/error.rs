//! Error type shared by every module.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum BowError {
    #[error("parse error at byte {1}: {0}")]
    Parse(String, usize),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid diagram: {0}")]
    Diagram(String),
    #[error("substitution guard: {0}")]
    SubstitutionGuard(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BowError>;
