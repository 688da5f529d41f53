use std::fmt;

use thiserror::Error;

/// A single rejected field of an experiment or run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mean power {mean_power} W does not exceed g(0) = {g0} W; no rate is sustainable")]
    NoPositiveRate { mean_power: f64, g0: f64 },

    #[error("index {index} out of range 0..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("horizon mismatch: schedule {schedule} s vs profile {profile} s")]
    HorizonMismatch { schedule: f64, profile: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid spec: {}", join_fields(.0))]
    InvalidSpec(Vec<FieldError>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_fields(errs: &[FieldError]) -> String {
    errs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
