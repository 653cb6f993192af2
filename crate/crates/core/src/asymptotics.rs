//! Next-order constants from sequences of minimal energies.
//!
//! For `0 < s < d` the normalized sequence is `g(N) = E^cp(N) / N^{1+s/d}`; for
//! the logarithmic energy it is `g(N) = (E^cp(N) + (2/d) N ln N) / N`. The limit
//! is estimated by least squares on a two-parameter correction model.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::SummationControl;
use crate::energy::{classical_shift, leading_coefficient};
use crate::error::{Error, Result};
use crate::exponent::RieszExponent;
use crate::lattice::Lattice;
use crate::optimizer::{check_n_list, minimize_energy, DescentBudget};
use crate::special::rgamma;
use crate::zeta::{epstein_zeta, zeta_prime_at_zero};

/// Largest design-matrix condition number accepted by the fit.
pub const MAX_CONDITION: f64 = 1e12;

/// Label stored with every fit: the correction shape is assumed, not proven.
pub const MODEL_NOTE: &str = "assumed correction model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub exponent: RieszExponent,
    pub lattice_id: String,
    pub lattice: Lattice,
    /// `(N, E^cp(N))` of the best configuration found.
    pub samples: Vec<(usize, f64)>,
    /// Numerical error bound of each sample energy.
    pub energy_error_bounds: Vec<f64>,
    pub g_values: Vec<f64>,
    pub fitted_constant: Option<f64>,
    pub correction_coefficient: Option<f64>,
    /// RMS of the fit residuals.
    pub fit_residual: Option<f64>,
    /// Regression standard error of the constant (zero with two samples' worth of freedom left).
    pub standard_error: Option<f64>,
    /// Sample error bounds propagated through the least-squares weights.
    pub numeric_bound: Option<f64>,
    pub model: String,
}

/// `"Z{d}"` for the cubic lattice, `"HEX"` for the unit hexagonal lattice, `"custom"` otherwise.
pub fn lattice_label(lattice: &Lattice) -> String {
    let d = lattice.dim();
    if lattice == &Lattice::cubic(d) {
        format!("Z{d}")
    } else if d == 2 && lattice == &Lattice::hexagonal() {
        "HEX".into()
    } else {
        "custom".into()
    }
}

/// `N^{1+s/d}` or `N`.
fn normalizer(exponent: RieszExponent, d: usize, n: usize) -> f64 {
    let nf = n as f64;
    match exponent {
        RieszExponent::Riesz(s) => nf.powf(1.0 + s / d as f64),
        RieszExponent::Log => nf,
    }
}

/// One term of the g-sequence.
pub fn g_value(exponent: RieszExponent, d: usize, n: usize, classical: f64) -> f64 {
    let nf = n as f64;
    match exponent {
        RieszExponent::Riesz(_) => classical / normalizer(exponent, d, n),
        RieszExponent::Log => (classical + 2.0 / d as f64 * nf * nf.ln()) / nf,
    }
}

/// Correction basis function: `N^{-s/d}` or `1 / ln N`.
fn correction(exponent: RieszExponent, d: usize, n: usize) -> f64 {
    let nf = n as f64;
    match exponent {
        RieszExponent::Riesz(s) => nf.powf(-s / d as f64),
        RieszExponent::Log => 1.0 / nf.ln(),
    }
}

fn model_label(exponent: RieszExponent, d: usize) -> String {
    match exponent {
        RieszExponent::Riesz(s) => format!("g(N) = C + b N^(-{}) ({MODEL_NOTE})", s / d as f64),
        RieszExponent::Log => format!("g(N) = C + b / ln N ({MODEL_NOTE})"),
    }
}

impl AsymptoticFit {
    /// Builds an unfitted record from known classical energies.
    pub fn from_samples(
        lattice: &Lattice,
        exponent: RieszExponent,
        samples: Vec<(usize, f64)>,
        energy_error_bounds: Vec<f64>,
    ) -> Result<Self> {
        let ns: Vec<usize> = samples.iter().map(|&(n, _)| n).collect();
        check_n_list(&ns)?;
        if energy_error_bounds.len() != samples.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples but {} error bounds",
                samples.len(),
                energy_error_bounds.len()
            )));
        }
        if let RieszExponent::Riesz(s) = exponent {
            if !(s > 0.0) {
                return Err(Error::DomainError(format!("Riesz exponent must be positive, got {s}")));
            }
        }
        let d = lattice.dim();
        let g_values = samples.iter().map(|&(n, e)| g_value(exponent, d, n, e)).collect();
        Ok(AsymptoticFit {
            exponent,
            lattice_id: lattice_label(lattice),
            lattice: lattice.clone(),
            samples,
            energy_error_bounds,
            g_values,
            fitted_constant: None,
            correction_coefficient: None,
            fit_residual: None,
            standard_error: None,
            numeric_bound: None,
            model: model_label(exponent, d),
        })
    }

    pub fn with_lattice_id(mut self, id: impl Into<String>) -> Self {
        self.lattice_id = id.into();
        self
    }

    /// Largest deviation between the stored g-values and those recomputed from the samples.
    pub fn g_consistency(&self) -> f64 {
        let d = self.lattice.dim();
        self.samples
            .iter()
            .zip(&self.g_values)
            .map(|(&(n, e), g)| (g_value(self.exponent, d, n, e) - g).abs())
            .fold(0.0, f64::max)
    }

    /// The constant that the lattice bound applies to: the fitted limit for Riesz,
    /// the fitted limit plus `2 zeta'_Lambda(0)` for log.
    pub fn comparable_constant(&self, control: &SummationControl) -> Result<f64> {
        let c = self.fitted_constant.ok_or_else(|| Error::DomainError("fit not run".into()))?;
        match self.exponent {
            RieszExponent::Riesz(_) => Ok(c),
            RieszExponent::Log => Ok(c + 2.0 * zeta_prime_at_zero(&self.lattice, None, control)?.value),
        }
    }

    /// `E(N) / N^2` over the leading coefficient at the largest sample, where `E = E^cp + shift`.
    pub fn leading_order_ratio(&self) -> Result<f64> {
        let &(n, ecp) = self.samples.last().ok_or_else(|| Error::DomainError("no samples".into()))?;
        let e = ecp + classical_shift(&self.lattice, self.exponent, n)?;
        Ok(e / (n as f64 * n as f64) / leading_coefficient(&self.lattice, self.exponent)?)
    }
}

/// Minimizes at each `N` and records the classical energies and their g-values.
pub fn build_g_sequence(
    lattice: &Lattice,
    exponent: RieszExponent,
    n_list: &[usize],
    budget: &DescentBudget,
    seed: u64,
    control: &SummationControl,
) -> Result<AsymptoticFit> {
    check_n_list(n_list)?;
    let mut samples = Vec::with_capacity(n_list.len());
    let mut bounds = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let r = minimize_energy(lattice, exponent, n, budget, seed, control)?;
        samples.push((n, r.best_classical.total));
        bounds.push(r.best_classical.error_bound);
    }
    AsymptoticFit::from_samples(lattice, exponent, samples, bounds)
}

/// Least-squares fit of `g(N) = C + b * phi(N)`.
pub fn fit_next_order_constant(mut fit: AsymptoticFit) -> Result<AsymptoticFit> {
    let m = fit.samples.len();
    if m < 3 {
        return Err(Error::DomainError(format!("need at least 3 samples to fit, got {m}")));
    }
    let d = fit.lattice.dim();
    let x = DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { correction(fit.exponent, d, fit.samples[i].0) });
    let y = DVector::from_vec(fit.g_values.clone());
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditionedFit(cond));
    }
    let pinv = svd.pseudo_inverse(0.0).map_err(|e| Error::DomainError(e.to_string()))?;
    let beta = &pinv * &y;
    let resid = &y - &x * &beta;
    let ss: f64 = resid.iter().map(|r| r * r).sum();
    let xtx_inv = (x.transpose() * &x).try_inverse().ok_or(Error::IllConditionedFit(cond))?;
    let sigma2 = if m > 2 { ss / (m - 2) as f64 } else { 0.0 };
    let numeric: f64 = (0..m)
        .map(|i| pinv[(0, i)].abs() * fit.energy_error_bounds[i] / normalizer(fit.exponent, d, fit.samples[i].0))
        .sum();
    if !beta[0].is_finite() {
        return Err(Error::IllConditionedFit(cond));
    }
    fit.fitted_constant = Some(beta[0]);
    fit.correction_coefficient = Some(beta[1]);
    fit.fit_residual = Some((ss / m as f64).sqrt());
    fit.standard_error = Some((sigma2 * xtx_inv[(0, 0)]).max(0.0).sqrt());
    fit.numeric_bound = Some(numeric);
    Ok(fit)
}

/// The upper bound for the next-order constant given by a unit co-volume lattice:
/// `zeta_Lambda(s)` for Riesz and `2 zeta'_Lambda(0)` for log.
pub fn lattice_upper_bound(lattice: &Lattice, exponent: RieszExponent, control: &SummationControl) -> Result<f64> {
    let c = lattice.covolume();
    if (c - 1.0).abs() > 1e-9 {
        return Err(Error::CovolumeNotOne(c));
    }
    match exponent {
        RieszExponent::Riesz(s) => Ok(epstein_zeta(lattice, s, control)?.value),
        RieszExponent::Log => Ok(2.0 * zeta_prime_at_zero(lattice, None, control)?.value),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub constant: f64,
    pub upper_bound: f64,
    /// `3 * fit_residual + numeric_bound`
    pub slack: f64,
    pub holds: bool,
}

/// Checks `constant <= upper_bound + 3 * residual` (plus the propagated numeric error).
pub fn check_upper_bound(fit: &AsymptoticFit, control: &SummationControl) -> Result<BoundCheck> {
    let constant = fit.comparable_constant(control)?;
    let upper_bound = lattice_upper_bound(&fit.lattice, fit.exponent, control)?;
    let slack = 3.0 * fit.fit_residual.unwrap_or(0.0) + fit.numeric_bound.unwrap_or(0.0);
    Ok(BoundCheck { constant, upper_bound, slack, holds: constant <= upper_bound + slack })
}

/// `C* = -2 pi^{s/2} d / (Gamma(s/2) s (d - s))`, a lower bound for the g-sequence limit.
pub fn g_lower_constant(d: usize, s: f64) -> f64 {
    let df = d as f64;
    -2.0 * PI.powf(s / 2.0) * df * rgamma(s / 2.0) / (s * (df - s))
}

/// `C* - 10 N^{-min(s, d-s)/d}`, the finite-`N` floor used for sample checks.
pub fn g_lower_bound(d: usize, s: f64, n: usize) -> f64 {
    let df = d as f64;
    g_lower_constant(d, s) - 10.0 * (n as f64).powf(-s.min(df - s) / df)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub fits: Vec<AsymptoticFit>,
    /// Constants that should agree across lattices (log: shifted by `2 zeta'_Lambda(0)`).
    pub comparable: Vec<f64>,
    pub spread: f64,
    /// Three times the largest fit residual.
    pub tolerance: f64,
    pub consistent: bool,
}

/// Fits the constant on each lattice and compares the lattice-free quantities.
pub fn lattice_independence_probe(
    lattices: &[Lattice],
    exponent: RieszExponent,
    n_list: &[usize],
    budget: &DescentBudget,
    seed: u64,
    control: &SummationControl,
) -> Result<IndependenceReport> {
    if lattices.len() < 2 {
        return Err(Error::DomainError(format!("need at least 2 lattices, got {}", lattices.len())));
    }
    for l in lattices {
        if (l.covolume() - 1.0).abs() > 1e-9 {
            return Err(Error::CovolumeNotOne(l.covolume()));
        }
    }
    let fits = lattices
        .iter()
        .map(|l| fit_next_order_constant(build_g_sequence(l, exponent, n_list, budget, seed, control)?))
        .collect::<Result<Vec<_>>>()?;
    independence_report(fits, control)
}

/// Compares already fitted constants.
pub fn independence_report(fits: Vec<AsymptoticFit>, control: &SummationControl) -> Result<IndependenceReport> {
    let comparable = fits.iter().map(|f| f.comparable_constant(control)).collect::<Result<Vec<_>>>()?;
    let hi = comparable.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = comparable.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi - lo;
    let tolerance = 3.0 * fits.iter().map(|f| f.fit_residual.unwrap_or(0.0)).fold(0.0, f64::max);
    let numeric: f64 = fits.iter().map(|f| f.numeric_bound.unwrap_or(0.0)).sum();
    Ok(IndependenceReport { consistent: spread <= tolerance + numeric, fits, comparable, spread, tolerance })
}

/// Serialized fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub exponent: RieszExponent,
    pub lattice: String,
    pub generator: Lattice,
    pub samples: Vec<(usize, f64)>,
    pub g_values: Vec<f64>,
    pub fitted_constant: f64,
    pub correction_coefficient: f64,
    pub residual: f64,
    pub standard_error: f64,
    pub numeric_bound: f64,
    /// `None` when the lattice does not have co-volume 1.
    pub upper_bound: Option<f64>,
    pub model: String,
}

pub fn fit_report(fit: &AsymptoticFit, control: &SummationControl) -> Result<FitReport> {
    let missing = || Error::DomainError("fit not run".into());
    let upper_bound = match lattice_upper_bound(&fit.lattice, fit.exponent, control) {
        Ok(u) => Some(u),
        Err(Error::CovolumeNotOne(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(FitReport {
        exponent: fit.exponent,
        lattice: fit.lattice_id.clone(),
        generator: fit.lattice.clone(),
        samples: fit.samples.clone(),
        g_values: fit.g_values.clone(),
        fitted_constant: fit.fitted_constant.ok_or_else(missing)?,
        correction_coefficient: fit.correction_coefficient.ok_or_else(missing)?,
        residual: fit.fit_residual.ok_or_else(missing)?,
        standard_error: fit.standard_error.ok_or_else(missing)?,
        numeric_bound: fit.numeric_bound.ok_or_else(missing)?,
        upper_bound,
        model: fit.model.clone(),
    })
}
