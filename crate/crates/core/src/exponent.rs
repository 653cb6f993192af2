use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Either a Riesz exponent `s > 0` or the logarithmic kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RieszExponent {
    Riesz(f64),
    Log,
}

impl RieszExponent {
    pub fn riesz(s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DomainError(format!("Riesz exponent must be positive, got {s}")));
        }
        Ok(RieszExponent::Riesz(s))
    }

    pub fn s(&self) -> Option<f64> {
        match self {
            RieszExponent::Riesz(s) => Some(*s),
            RieszExponent::Log => None,
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, RieszExponent::Log)
    }
}

impl fmt::Display for RieszExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RieszExponent::Riesz(s) => write!(f, "s={s}"),
            RieszExponent::Log => write!(f, "log"),
        }
    }
}
