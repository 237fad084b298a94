use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "timestep {dt:e} s too large: limit {limit:e} s set by the {pole} ({pole_hz:.4e} Hz)"
    )]
    TimestepTooLarge {
        dt: f64,
        limit: f64,
        pole: &'static str,
        pole_hz: f64,
    },

    #[error("frequency grid is empty")]
    EmptyGrid,

    #[error("frequency grid invalid: {0}")]
    InvalidGrid(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("ratio undefined: {0}")]
    UndefinedRatio(&'static str),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Rejects NaN/inf and values outside `range` with a named error.
pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must be finite, got {value}")))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    check_finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must be > 0, got {value}")))
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<f64> {
    check_finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must be >= 0, got {value}")))
    }
}
