//! Multi-start gradient descent for upper estimates of minimal energies.
//!
//! Descents run on a tabulated copy of the energy; the final configuration of
//! every restart is re-evaluated with the exact evaluator before selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::SummationControl;
use crate::energy::{EnergyEvaluator, EnergyValue};
use crate::error::{Error, Result};
use crate::exponent::RieszExponent;
use crate::lattice::{
    lattice_configuration, perfect_root, random_configuration_stream, wrap_unit, Lattice, TorusConfiguration,
};
use crate::zeta::MAX_DIM;

/// Pointwise error allowed for the tabulated kernel used inside descents.
const TABLE_ERR: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// A descent stops once this many consecutive steps each lower the energy by
/// less than `STALL_REL * |E|`, i.e. it sits at the rounding floor.
const STALL_STEPS: usize = 20;
const STALL_REL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentBudget {
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for DescentBudget {
    fn default() -> Self {
        DescentBudget { restarts: 8, max_iters: 5000, grad_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationResult {
    pub best_config: TorusConfiguration,
    /// Periodic energy `E` of `best_config`, exact evaluator.
    pub best_energy: EnergyValue,
    /// Classical energy `E^cp` of `best_config`.
    pub best_classical: EnergyValue,
    /// Number of descents run (random restarts plus the lattice seed, if any).
    pub restarts: usize,
    pub iterations_per_restart: Vec<usize>,
    pub converged_flags: Vec<bool>,
    /// Exact periodic energy at the end of each descent.
    pub final_energies: Vec<f64>,
    /// Gradient infinity-norm (tabulated energy) at the end of each descent.
    pub final_grad_norms: Vec<f64>,
    pub best_restart: usize,
    pub lattice_seeded: bool,
}

#[derive(Debug, Clone)]
struct Descent {
    flat: Vec<f64>,
    iterations: usize,
    converged: bool,
    grad_norm: f64,
}

/// Gradient descent with Armijo backtracking (halving) from `start`.
///
/// The first trial step is the Barzilai–Borwein step from the previous
/// iteration, capped so no point moves more than a quarter of the mean spacing.
fn descend(ev: &EnergyEvaluator, start: Vec<f64>, budget: &DescentBudget) -> Result<Descent> {
    let lattice = ev.lattice();
    let d = lattice.dim();
    let n = start.len() / d;
    let spacing = (lattice.covolume() / n as f64).powf(1.0 / d as f64);
    let max_move = 0.25 * spacing;

    let mut x = start;
    let mut g = vec![0.0; x.len()];
    let mut e = ev.energy_and_gradient(&x, &mut g)?.total;
    let mut xt = vec![0.0; x.len()];
    let mut gt = vec![0.0; x.len()];
    let mut alpha = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0;
    let mut g_inf: f64;
    let mut step_frac = [0.0; MAX_DIM];

    loop {
        g_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if g_inf < budget.grad_tol {
            converged = true;
            break;
        }
        if iterations >= budget.max_iters || stalled >= STALL_STEPS {
            break;
        }
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let mut a = alpha.min(max_move / g_inf);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for p in 0..n {
                lattice.cart_to_frac(&g[p * d..(p + 1) * d], &mut step_frac[..d]);
                for i in 0..d {
                    xt[p * d + i] = wrap_unit(x[p * d + i] - a * step_frac[i]);
                }
            }
            match ev.energy_and_gradient(&xt, &mut gt) {
                Ok(v) if v.total <= e - ARMIJO * a * gg => {
                    accepted = Some(v.total);
                    break;
                }
                Ok(_) | Err(Error::CoincidentPoints(..)) => a *= 0.5,
                Err(other) => return Err(other),
            }
        }
        let Some(et) = accepted else { break };
        // Barzilai–Borwein: s = -a g, y = gt - g
        let sy: f64 = g.iter().zip(&gt).map(|(g0, g1)| -a * g0 * (g1 - g0)).sum();
        alpha = if sy > 0.0 { a * a * gg / sy } else { 2.0 * a };
        std::mem::swap(&mut x, &mut xt);
        std::mem::swap(&mut g, &mut gt);
        stalled = if e - et < STALL_REL * e.abs() { stalled + 1 } else { 0 };
        e = et;
        iterations += 1;
    }
    Ok(Descent { flat: x, iterations, converged, grad_norm: g_inf })
}

/// Runs one descent per starting configuration and keeps the lowest exact energy
/// (ties go to the earliest start).
fn run_starts(
    exact: &EnergyEvaluator,
    starts: Vec<Vec<f64>>,
    budget: &DescentBudget,
    lattice_seeded: bool,
) -> Result<MinimizationResult> {
    if starts.is_empty() {
        return Err(Error::DomainError("no starting configuration (restarts = 0 and n is not m^d)".into()));
    }
    let fast = exact.clone().tabulated(TABLE_ERR);
    let runs: Vec<Result<(Descent, EnergyValue)>> = starts
        .into_par_iter()
        .map(|s| {
            let run = descend(&fast, s, budget)?;
            let e = exact.energy(&run.flat)?;
            Ok((run, e))
        })
        .collect();
    let runs: Vec<(Descent, EnergyValue)> = runs.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (_, e)) in runs.iter().enumerate() {
        if e.total < runs[best].1.total {
            best = i;
        }
    }
    let lattice = exact.lattice().clone();
    let n = runs[best].0.flat.len() / lattice.dim();
    let best_energy = runs[best].1;
    let shift = exact.classical_shift(n)?;
    Ok(MinimizationResult {
        best_config: TorusConfiguration::from_flat(lattice, &runs[best].0.flat)?,
        best_energy,
        best_classical: EnergyValue { total: best_energy.total - shift, ..best_energy },
        restarts: runs.len(),
        iterations_per_restart: runs.iter().map(|(r, _)| r.iterations).collect(),
        converged_flags: runs.iter().map(|(r, _)| r.converged).collect(),
        final_energies: runs.iter().map(|(_, e)| e.total).collect(),
        final_grad_norms: runs.iter().map(|(r, _)| r.grad_norm).collect(),
        best_restart: best,
        lattice_seeded,
    })
}

fn check_budget(budget: &DescentBudget) -> Result<()> {
    if !(budget.grad_tol >= 0.0) {
        return Err(Error::DomainError(format!("grad_tol must be nonnegative, got {}", budget.grad_tol)));
    }
    Ok(())
}

/// Best-found minimal periodic energy for `n` points.
pub fn minimize_energy(
    lattice: &Lattice,
    exponent: RieszExponent,
    n: usize,
    budget: &DescentBudget,
    seed: u64,
    control: &SummationControl,
) -> Result<MinimizationResult> {
    if n < 2 {
        return Err(Error::DomainError(format!("need n >= 2, got {n}")));
    }
    check_budget(budget)?;
    let exact = EnergyEvaluator::new(lattice, exponent, control)?;
    let mut starts = Vec::with_capacity(budget.restarts + 1);
    for i in 0..budget.restarts {
        starts.push(random_configuration_stream(lattice, n, seed, i as u64)?.flat());
    }
    let seeded = match perfect_root(n, lattice.dim()) {
        Some(m) => {
            starts.push(lattice_configuration(lattice, m)?.flat());
            true
        }
        None => false,
    };
    run_starts(&exact, starts, budget, seeded)
}

/// A single descent from a given configuration.
pub fn minimize_from(
    config: &TorusConfiguration,
    exponent: RieszExponent,
    budget: &DescentBudget,
    control: &SummationControl,
) -> Result<MinimizationResult> {
    check_budget(budget)?;
    let exact = EnergyEvaluator::new(config.lattice(), exponent, control)?;
    run_starts(&exact, vec![config.flat()], budget, false)
}

/// `E^cp(N) / (N (N-1))` of the best configuration found for each `N`.
pub fn monotonicity_probe(
    lattice: &Lattice,
    exponent: RieszExponent,
    n_list: &[usize],
    budget: &DescentBudget,
    seed: u64,
    control: &SummationControl,
) -> Result<Vec<f64>> {
    check_n_list(n_list)?;
    n_list
        .iter()
        .map(|&n| {
            let r = minimize_energy(lattice, exponent, n, budget, seed, control)?;
            Ok(r.best_classical.total / (n * (n - 1)) as f64)
        })
        .collect()
}

pub(crate) fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::DomainError("empty n_list".into()));
    }
    if n_list.iter().any(|&n| n < 2) || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DomainError("n_list must be strictly increasing with entries >= 2".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_iterations_keeps_initial() {
        let l = Lattice::cubic(2);
        let budget = DescentBudget { restarts: 3, max_iters: 0, grad_tol: 1e-9 };
        let ctl = SummationControl::default();
        let r = minimize_energy(&l, RieszExponent::Riesz(1.0), 5, &budget, 4, &ctl).unwrap();
        assert_eq!(r.iterations_per_restart, vec![0, 0, 0]);
        let min0 = r.final_energies.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_energy.total, min0);
        assert!(!r.lattice_seeded);
    }

    #[test]
    fn descent_lowers_energy() {
        let l = Lattice::hexagonal();
        let ctl = SummationControl::default();
        let start = random_configuration_stream(&l, 6, 9, 0).unwrap();
        let e0 = crate::energy::periodic_energy(&start, RieszExponent::Log, &ctl).unwrap().total;
        let budget = DescentBudget { restarts: 1, max_iters: 50, grad_tol: 1e-9 };
        let r = minimize_from(&start, RieszExponent::Log, &budget, &ctl).unwrap();
        assert!(r.best_energy.total < e0);
    }

    #[test]
    fn n_list_validation() {
        assert!(check_n_list(&[2, 3, 5]).is_ok());
        assert!(check_n_list(&[3, 3]).is_err());
        assert!(check_n_list(&[1, 4]).is_err());
    }
}
