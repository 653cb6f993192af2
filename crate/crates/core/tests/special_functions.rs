mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use riesz_core::{
    exponential_integral_e1, theta_direct, theta_dual, upper_incomplete_gamma, Error, Lattice, SummationControl,
};

fn gamma_upper(a: f64, x: f64) -> f64 {
    upper_incomplete_gamma(a, x).unwrap().value
}

#[test]
fn incomplete_gamma_values() {
    assert!((gamma_upper(1.0, 2.0) - (-2.0f64).exp()).abs() < 1e-15);
    assert!((gamma_upper(0.5, 1e-14) - PI.sqrt()).abs() < 1e-6);
    let oracle = common::upper_gamma_quadrature(-0.5, 1.0);
    let v = gamma_upper(-0.5, 1.0);
    assert!((v - oracle).abs() < 1e-10 * oracle, "{v} vs {oracle}");
}

#[test]
fn incomplete_gamma_against_quadrature_grid() {
    for &a in &[-2.5, -1.0, -0.5, 0.0, 0.25, 1.5, 3.0] {
        for &x in &[0.1, 1.0, 3.0, 10.0] {
            let oracle = common::upper_gamma_quadrature(a, x);
            let v = gamma_upper(a, x);
            assert!((v - oracle).abs() < 1e-10 * oracle, "a={a} x={x}: {v} vs {oracle}");
        }
    }
}

#[test]
fn incomplete_gamma_errors_and_underflow() {
    assert!(matches!(upper_incomplete_gamma(1.0, 0.0), Err(Error::DomainError(_))));
    assert!(matches!(upper_incomplete_gamma(1.0, -1.0), Err(Error::DomainError(_))));
    let u = upper_incomplete_gamma(2.0, 800.0).unwrap();
    assert!(u.underflow);
    assert_eq!(u.value, 0.0);
}

#[test]
fn e1_values() {
    let oracle = common::simpson(&|u: f64| if u > 0.0 { (-1.0 / u).exp() / u } else { 0.0 }, 0.0, 1.0, 1e-15);
    let v = exponential_integral_e1(1.0).unwrap();
    assert!((v - oracle).abs() < 1e-12 * oracle);
    assert!(matches!(exponential_integral_e1(0.0), Err(Error::DomainError(_))));
}

#[test]
fn e1_is_decreasing_and_bounded() {
    let mut prev = f64::INFINITY;
    for k in 0..=200 {
        let x = 1e-3 * (5e4f64).powf(k as f64 / 200.0);
        let v = exponential_integral_e1(x).unwrap();
        assert!(v < prev);
        assert!(v <= (-x).exp() / x);
        prev = v;
    }
}

#[test]
fn theta_examples() {
    let ctl = SummationControl::default();
    let z = Lattice::cubic(1);
    let t50 = theta_direct(&z, 50.0, &ctl).unwrap();
    assert!((t50.value - 1.0).abs() < 1e-20 + 3.0 * (-50.0f64).exp());
    let direct: f64 = (-10i32..=10).map(|n| (-(n * n) as f64).exp()).sum();
    let t1 = theta_direct(&z, 1.0, &ctl).unwrap();
    assert!((t1.value - direct).abs() < 1e-12);
    assert!(t1.terms_used >= 1 && t1.truncation_bound >= 0.0);
    let scaled = theta_direct(&z.scaled(3.0).unwrap(), 0.2, &ctl).unwrap();
    let base = theta_direct(&z, 1.8, &ctl).unwrap();
    assert!((scaled.value - base.value).abs() < 1e-12);
    // Lambda = Z, t = pi^2: dual terms are e^{-n^2}/pi
    let dual = theta_dual(&z, PI * PI, &ctl).unwrap();
    let oracle: f64 = (-10i32..=10).map(|n| (-(n * n) as f64).exp()).sum::<f64>() / PI;
    assert!((dual.value - oracle).abs() < 1e-12);
}

#[test]
fn poisson_identity() {
    let ctl = SummationControl::default();
    for l in [Lattice::cubic(1), Lattice::cubic(2), Lattice::hexagonal()] {
        let d = l.dim() as f64;
        for t in [0.5, 1.0, 2.0] {
            let a = theta_direct(&l, t, &ctl).unwrap().value;
            let b = theta_dual(&l, t, &ctl).unwrap().value;
            assert!((b - PI.powf(-d / 2.0) * a).abs() < 1e-10, "d={d} t={t}");
        }
    }
}

#[test]
fn dual_theta_large_t_decay() {
    let ctl = SummationControl::with_tol(1e-15);
    let l = Lattice::hexagonal();
    let l0 = l.shortest_len();
    let mut resolved = 0;
    for k in 0..10 {
        let t = 5.0 + 5.0 * k as f64;
        let r = theta_dual(&l, t, &ctl).unwrap();
        let gap = (r.value - 1.0 / PI).abs();
        let floor = r.truncation_bound + 1e-15;
        let scale = (-l0 * l0 * t).exp();
        if scale > 1e3 * floor {
            // the hexagonal lattice has six shortest vectors
            let c = gap / scale;
            assert!(c < 10.0, "t={t}: C = {c}");
            resolved += 1;
        } else {
            assert!(gap <= floor + scale * 10.0, "t={t}: {gap}");
        }
    }
    assert!(resolved >= 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence(ai in -5i32..=6, x in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let a = ai as f64 * 0.5;
        let lhs = gamma_upper(a + 1.0, x);
        let rhs = a * gamma_upper(a, x) + x.powf(a) * (-x).exp();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs());
    }

    #[test]
    fn e1_is_gamma_zero(x in 1e-3f64..50.0) {
        let a = exponential_integral_e1(x).unwrap();
        let b = gamma_upper(0.0, x);
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }
}
