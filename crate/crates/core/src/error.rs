use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PgssError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric overflow at t = {t}: {detail}")]
    NumericOverflow { t: usize, detail: String },

    /// A recurrence left its mathematical domain. Indicates a bug, not bad input.
    #[error("internal numeric error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, PgssError>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(PgssError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        });
    }
    if value <= 0.0 {
        return Err(PgssError::InvalidParameter {
            name,
            value,
            reason: "must be strictly positive",
        });
    }
    Ok(value)
}
