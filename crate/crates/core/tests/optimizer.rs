mod common;

use riesz_core::{
    classical_energy, epstein_zeta, lattice_configuration, minimize_energy, minimize_from, monotonicity_probe,
    DescentBudget, Lattice, RieszExponent, SummationControl,
};

fn ctl() -> SummationControl {
    SummationControl::default()
}

fn budget(restarts: usize) -> DescentBudget {
    DescentBudget { restarts, max_iters: 2000, grad_tol: 1e-9 }
}

#[test]
fn equal_spacing_on_the_circle() {
    let oracle = 8.0 * (8f64.sqrt() - 1.0) * 2.0 * common::riemann_zeta(0.5);
    let r = minimize_energy(&Lattice::cubic(1), RieszExponent::Riesz(0.5), 8, &budget(4), 1, &ctl()).unwrap();
    let gap = r.best_classical.total - oracle;
    assert!(gap.abs() <= 1e-6, "gap {gap}");
    assert_eq!(r.restarts, 5);
    assert!(r.lattice_seeded);
    assert_eq!(r.iterations_per_restart.len(), 5);
    assert_eq!(r.converged_flags.len(), 5);
}

#[test]
fn four_points_on_the_square_torus() {
    let l = Lattice::cubic(2);
    let grid = classical_energy(&lattice_configuration(&l, 2).unwrap(), RieszExponent::Riesz(1.0), &ctl()).unwrap();
    let r = minimize_energy(&l, RieszExponent::Riesz(1.0), 4, &budget(4), 3, &ctl()).unwrap();
    assert!(r.best_classical.total <= grid.total + 1e-8);
}

#[test]
fn descent_never_increases_energy() {
    let l = Lattice::hexagonal();
    for e in [RieszExponent::Riesz(1.0), RieszExponent::Log] {
        let zero =
            minimize_energy(&l, e, 7, &DescentBudget { restarts: 3, max_iters: 0, grad_tol: 1e-9 }, 9, &ctl()).unwrap();
        let run = minimize_energy(&l, e, 7, &DescentBudget { restarts: 3, max_iters: 40, grad_tol: 1e-9 }, 9, &ctl())
            .unwrap();
        for (a, b) in run.final_energies.iter().zip(&zero.final_energies) {
            assert!(a <= b);
        }
        assert_eq!(zero.best_energy.total, zero.final_energies.iter().cloned().fold(f64::INFINITY, f64::min));
    }
}

#[test]
fn result_reevaluates_exactly() {
    let l = Lattice::cubic(2);
    let r = minimize_energy(&l, RieszExponent::Riesz(1.5), 6, &budget(2), 5, &ctl()).unwrap();
    let again = classical_energy(&r.best_config, RieszExponent::Riesz(1.5), &ctl()).unwrap();
    assert!((again.total - r.best_classical.total).abs() <= again.error_bound + 1e-12 * again.total.abs());
}

#[test]
fn runs_are_reproducible() {
    let l = Lattice::hexagonal();
    let a = minimize_energy(&l, RieszExponent::Log, 9, &budget(3), 42, &ctl()).unwrap();
    let b = minimize_energy(&l, RieszExponent::Log, 9, &budget(3), 42, &ctl()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn circle_sequence_is_increasing() {
    let ns: Vec<usize> = (2..=12).collect();
    let seq = monotonicity_probe(&Lattice::cubic(1), RieszExponent::Riesz(0.5), &ns, &budget(2), 1, &ctl()).unwrap();
    for w in seq.windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "{seq:?}");
    }
    // closed form (N^s - 1) 2 zeta(s) / (N - 1)
    let z = 2.0 * common::riemann_zeta(0.5);
    for (v, &n) in seq.iter().zip(&ns) {
        let nf = n as f64;
        assert!((v - (nf.sqrt() - 1.0) * z / (nf - 1.0)).abs() < 1e-8);
    }
}

#[test]
fn square_torus_sequence_is_nondecreasing() {
    let seq =
        monotonicity_probe(&Lattice::cubic(2), RieszExponent::Riesz(1.0), &[4, 9, 16], &budget(4), 2, &ctl()).unwrap();
    for w in seq.windows(2) {
        assert!(w[1] >= w[0] - 1e-4, "{seq:?}");
    }
}

#[test]
fn single_entry_probe() {
    let seq = monotonicity_probe(&Lattice::cubic(1), RieszExponent::Log, &[5], &budget(1), 1, &ctl()).unwrap();
    assert_eq!(seq.len(), 1);
    assert!(monotonicity_probe(&Lattice::cubic(1), RieszExponent::Log, &[5, 4], &budget(1), 1, &ctl()).is_err());
}

#[test]
fn sublattice_inequality() {
    let s = 1.0;
    let e = RieszExponent::Riesz(s);
    let fine = Lattice::cubic(2);
    let coarse = fine.scaled(2.0).unwrap();
    let best = minimize_energy(&fine, e, 3, &budget(4), 7, &ctl()).unwrap();
    let replicated = best.best_config.replicated_into(&coarse).unwrap();
    assert_eq!(replicated.len(), 12);
    let shift =
        12.0 * (epstein_zeta(&fine, s, &ctl()).unwrap().value - epstein_zeta(&coarse, s, &ctl()).unwrap().value);
    let rhs = 4.0 * best.best_classical.total + shift;
    // the replicated configuration attains the right-hand side exactly
    let feasible = classical_energy(&replicated, e, &ctl()).unwrap().total;
    assert!((feasible - rhs).abs() < 1e-8, "{feasible} vs {rhs}");
    let improved = minimize_from(&replicated, e, &budget(1), &ctl()).unwrap();
    assert!(improved.best_classical.total <= rhs + 1e-3);
}

#[test]
fn refinement_bound() {
    let s = 1.0;
    let e = RieszExponent::Riesz(s);
    let l = Lattice::hexagonal();
    let zeta = epstein_zeta(&l, s, &ctl()).unwrap().value;
    let n = 3usize;
    let m = 2usize;
    let best = minimize_energy(&l, e, n, &budget(4), 11, &ctl()).unwrap();
    let g_n = best.best_classical.total / (n as f64).powf(1.5);
    let big = m * m * n;
    let refined = minimize_from(&best.best_config.refined(m).unwrap(), e, &budget(1), &ctl()).unwrap();
    let g_big = refined.best_classical.total / (big as f64).powf(1.5);
    let bound = g_n + (1.0 - (m as f64).powf(-s)) * zeta / (n as f64).powf(0.5);
    assert!(g_big <= bound + 1e-8, "{g_big} vs {bound}");
}
