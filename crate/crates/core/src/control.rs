use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation settings for the Ewald sums.
///
/// Radii left as `None` are chosen from rigorous Gaussian tail bounds so that
/// the real and dual tails each stay below `abs_tol / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummationControl {
    pub real_radius: Option<f64>,
    pub dual_radius: Option<f64>,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SummationControl {
    fn default() -> Self {
        SummationControl { real_radius: None, dual_radius: None, abs_tol: 1e-10, max_terms: 1_000_000 }
    }
}

impl SummationControl {
    pub fn with_tol(abs_tol: f64) -> Self {
        SummationControl { abs_tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::DomainError(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        for r in [self.real_radius, self.dual_radius].into_iter().flatten() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::DomainError(format!("radii must be positive, got {r}")));
            }
        }
        if self.max_terms == 0 {
            return Err(Error::DomainError("max_terms must be positive".into()));
        }
        Ok(())
    }
}
