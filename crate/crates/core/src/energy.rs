//! Pair energies on the torus and their gradients.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::SummationControl;
use crate::error::{Error, Result};
use crate::exponent::RieszExponent;
use crate::lattice::{Lattice, TorusConfiguration};
use crate::special::rgamma;
use crate::zeta::{continuous_constant, log_constant, EwaldEvaluator, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub total: f64,
    pub error_bound: f64,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGradient {
    /// `dE/dx_k` in Cartesian coordinates, one row per point.
    pub per_point: Vec<Vec<f64>>,
}

/// Reusable pair-energy evaluator for a fixed lattice, exponent and truncation.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator {
    ewald: EwaldEvaluator,
    exponent: RieszExponent,
}

impl EnergyEvaluator {
    pub fn new(lattice: &Lattice, exponent: RieszExponent, control: &SummationControl) -> Result<Self> {
        if let RieszExponent::Riesz(s) = exponent {
            if !(s > 0.0) {
                return Err(Error::DomainError(format!("Riesz exponent must be positive, got {s}")));
            }
        }
        Ok(EnergyEvaluator { ewald: EwaldEvaluator::new(lattice, exponent, control)?, exponent })
    }

    /// Switches the real-space kernel to a cubic Hermite table (see [`EwaldEvaluator::tabulated`]).
    pub fn tabulated(self, max_err: f64) -> Self {
        EnergyEvaluator { ewald: self.ewald.tabulated(max_err), exponent: self.exponent }
    }

    pub fn lattice(&self) -> &Lattice {
        self.ewald.lattice()
    }

    pub fn exponent(&self) -> RieszExponent {
        self.exponent
    }

    pub fn ewald(&self) -> &EwaldEvaluator {
        &self.ewald
    }

    /// `E(omega) = sum_{j != k} F(x_k - x_j)` for a flat `n * d` array of fractional coordinates.
    ///
    /// Each pair is evaluated at the difference oriented by the lexicographic
    /// order of its two points, and the pair values are summed in sorted order,
    /// so the total does not depend on the order of the points.
    pub fn energy(&self, flat: &[f64]) -> Result<EnergyValue> {
        let d = self.lattice().dim();
        let n = flat.len() / d;
        let rows: Vec<Result<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut diff = [0.0; MAX_DIM];
                let mut vals = Vec::with_capacity(n - j - 1);
                for k in j + 1..n {
                    oriented_diff(flat, d, j, k, &mut diff[..d]);
                    vals.push(self.pair(&diff[..d], j, k)?);
                }
                Ok(vals)
            })
            .collect();
        let mut vals = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for r in rows {
            vals.extend(r?);
        }
        Ok(self.wrap(2.0 * sorted_sum(vals), n))
    }

    /// Energy plus its gradient with respect to Cartesian positions; `grad` has length `n * d`.
    pub fn energy_and_gradient(&self, flat: &[f64], grad: &mut [f64]) -> Result<EnergyValue> {
        let d = self.lattice().dim();
        let n = flat.len() / d;
        let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut diff = [0.0; MAX_DIM];
                let mut g = [0.0; MAX_DIM];
                let mut vals = Vec::with_capacity(n - j - 1);
                let mut pair_grads = Vec::with_capacity((n - j - 1) * d);
                for k in j + 1..n {
                    let sign = oriented_diff(flat, d, j, k, &mut diff[..d]);
                    vals.push(self.ewald.value_and_gradient(&diff[..d], &mut g[..d]).map_err(|e| coincident(e, j, k))?);
                    // gradient with respect to x_k of F(x_k - x_j)
                    pair_grads.extend(g[..d].iter().map(|v| sign * v));
                }
                Ok((vals, pair_grads))
            })
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut vals = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for (j, r) in rows.into_iter().enumerate() {
            let (v, pg) = r?;
            vals.extend(v);
            for (off, k) in (j + 1..n).enumerate() {
                for i in 0..d {
                    let g = 2.0 * pg[off * d + i];
                    grad[k * d + i] += g;
                    grad[j * d + i] -= g;
                }
            }
        }
        Ok(self.wrap(2.0 * sorted_sum(vals), n))
    }

    #[inline]
    fn pair(&self, diff: &[f64], j: usize, k: usize) -> Result<f64> {
        self.ewald.potential(diff).map(|p| p.value).map_err(|e| coincident(e, j, k))
    }

    fn wrap(&self, total: f64, n: usize) -> EnergyValue {
        let pairs = n * n.saturating_sub(1);
        EnergyValue { total, error_bound: pairs as f64 * self.ewald.error_bound(), pair_count: pairs }
    }

    /// `E - E^cp` for `n` points.
    pub fn classical_shift(&self, n: usize) -> Result<f64> {
        classical_shift(self.lattice(), self.exponent, n)
    }
}

/// Writes `x_k - x_j` or `x_j - x_k`, whichever starts from the lexicographically
/// smaller point, and returns `1.0` or `-1.0` accordingly.
#[inline]
fn oriented_diff(flat: &[f64], d: usize, j: usize, k: usize, out: &mut [f64]) -> f64 {
    let (a, b) = (&flat[j * d..(j + 1) * d], &flat[k * d..(k + 1) * d]);
    let forward = a.iter().zip(b).find(|(p, q)| p != q).is_none_or(|(p, q)| p < q);
    if forward {
        for i in 0..d {
            out[i] = b[i] - a[i];
        }
        1.0
    } else {
        for i in 0..d {
            out[i] = a[i] - b[i];
        }
        -1.0
    }
}

fn sorted_sum(mut vals: Vec<f64>) -> f64 {
    vals.sort_unstable_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in vals {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

fn coincident(e: Error, j: usize, k: usize) -> Error {
    match e {
        Error::PointOnLattice => Error::CoincidentPoints(j, k),
        other => other,
    }
}

/// `N(N-1) I_{s,Lambda}` for Riesz, `N(N-1) 2 pi^{d/2} / (d |Lambda|)` for log.
pub fn classical_shift(lattice: &Lattice, exponent: RieszExponent, n: usize) -> Result<f64> {
    let pairs = (n * n.saturating_sub(1)) as f64;
    match exponent {
        RieszExponent::Riesz(s) => {
            let d = lattice.dim() as f64;
            if (s - d).abs() <= 1e-14 * d {
                return Err(Error::PoleAtD(lattice.dim()));
            }
            Ok(pairs * continuous_constant(lattice, s))
        }
        RieszExponent::Log => Ok(pairs * log_constant(lattice)),
    }
}

pub fn periodic_energy(
    config: &TorusConfiguration,
    exponent: RieszExponent,
    control: &SummationControl,
) -> Result<EnergyValue> {
    EnergyEvaluator::new(config.lattice(), exponent, control)?.energy(&config.flat())
}

/// `E^cp`, obtained from `E` by the exact constant shift.
pub fn classical_energy(
    config: &TorusConfiguration,
    exponent: RieszExponent,
    control: &SummationControl,
) -> Result<EnergyValue> {
    let shift = classical_shift(config.lattice(), exponent, config.len())?;
    let e = periodic_energy(config, exponent, control)?;
    Ok(EnergyValue { total: e.total - shift, ..e })
}

pub fn energy_gradient(
    config: &TorusConfiguration,
    exponent: RieszExponent,
    control: &SummationControl,
) -> Result<EnergyGradient> {
    let d = config.lattice().dim();
    let ev = EnergyEvaluator::new(config.lattice(), exponent, control)?;
    let mut flat_grad = vec![0.0; config.len() * d];
    ev.energy_and_gradient(&config.flat(), &mut flat_grad)?;
    Ok(EnergyGradient { per_point: flat_grad.chunks(d).map(|c| c.to_vec()).collect() })
}

/// `lim E(N)/N^2`: `I_{s,Lambda}` for `0 < s < d`, `2 pi^{d/2} / (d |Lambda|)` for log.
pub fn leading_coefficient(lattice: &Lattice, exponent: RieszExponent) -> Result<f64> {
    let d = lattice.dim() as f64;
    match exponent {
        RieszExponent::Riesz(s) if s > 0.0 && s < d => {
            Ok(2.0 * PI.powf(d / 2.0) * rgamma(s / 2.0) / (lattice.covolume() * (d - s)))
        }
        RieszExponent::Riesz(s) => Err(Error::DomainError(format!("leading coefficient needs 0 < s < d, got {s}"))),
        RieszExponent::Log => Ok(log_constant(lattice)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lattice_configuration, random_configuration, TorusPoint};
    use crate::zeta::periodic_potential;

    #[test]
    fn two_points() {
        let l = Lattice::cubic(2);
        let c = TorusConfiguration::new(l.clone(), vec![TorusPoint::new(&[0.1, 0.2]), TorusPoint::new(&[0.6, 0.9])])
            .unwrap();
        let ctl = SummationControl::default();
        let e = periodic_energy(&c, RieszExponent::Riesz(1.0), &ctl).unwrap();
        let f = periodic_potential(&l, RieszExponent::Riesz(1.0), &TorusPoint::new(&[0.5, 0.7]), &ctl).unwrap();
        assert!((e.total - 2.0 * f.value).abs() < 1e-13);
        assert_eq!(e.pair_count, 2);
    }

    #[test]
    fn coincident_points_are_named() {
        let l = Lattice::cubic(1);
        let c = TorusConfiguration::from_flat(l, &[0.1, 0.4, 0.1]).unwrap();
        let e = periodic_energy(&c, RieszExponent::Log, &SummationControl::default());
        assert_eq!(e, Err(Error::CoincidentPoints(0, 2)));
    }

    #[test]
    fn lattice_configuration_is_critical() {
        let c = lattice_configuration(&Lattice::hexagonal(), 3).unwrap();
        let g = energy_gradient(&c, RieszExponent::Riesz(1.0), &SummationControl::default()).unwrap();
        for row in g.per_point {
            for v in row {
                assert!(v.abs() < 1e-8, "{v}");
            }
        }
    }

    #[test]
    fn leading_coefficients() {
        let l = Lattice::cubic(2);
        let i = leading_coefficient(&l, RieszExponent::Riesz(1.0)).unwrap();
        assert!((i - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!((leading_coefficient(&l, RieszExponent::Log).unwrap() - PI).abs() < 1e-14);
        assert!(leading_coefficient(&l, RieszExponent::Riesz(2.5)).is_err());
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let c = random_configuration(&Lattice::hexagonal(), 7, 3).unwrap();
        let g = energy_gradient(&c, RieszExponent::Log, &SummationControl::default()).unwrap();
        for i in 0..2 {
            let s: f64 = g.per_point.iter().map(|r| r[i]).sum();
            assert!(s.abs() < 7e-8);
        }
    }
}
