//! Gamma-type kernels used by the Ewald forms, plus lattice theta sums.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::SummationControl;
use crate::error::{Error, Result};
use crate::lattice::Lattice;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments beyond this underflow `e^{-x}`.
pub const UNDERFLOW_X: f64 = 700.0;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (poles give infinity).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        if x == x.floor() {
            return f64::INFINITY;
        }
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        lanczos(x)
    }
}

fn lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `1/Gamma(x)`, an entire function that vanishes at the non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x >= 0.5 {
        return 1.0 / lanczos(x);
    }
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    // 1/Gamma(x) = x / Gamma(x + 1), accurate near the poles
    let mut prod = 1.0;
    let mut y = x;
    while y < 0.5 {
        prod *= y;
        y += 1.0;
    }
    prod / lanczos(y)
}

/// `Gamma(1 + a) - 1` without cancellation for small `a`.
pub fn gamma1pm1(a: f64) -> f64 {
    if a.abs() < 0.01 {
        let zeta = [
            PI * PI / 6.0,
            1.202_056_903_159_594_2,
            PI.powi(4) / 90.0,
            1.036_927_755_143_369_9,
            PI.powi(6) / 945.0,
            1.008_349_277_381_922_8,
            PI.powi(8) / 9450.0,
        ];
        let mut lg = -EULER_GAMMA * a;
        let mut p = a;
        for (k, z) in (2..=8).zip(zeta) {
            p *= a;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            lg += sign * z * p / k as f64;
        }
        lg.exp_m1()
    } else {
        gamma(1.0 + a) - 1.0
    }
}

/// Result of [`upper_incomplete_gamma`]; `underflow` is set when the value was flushed to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncompleteGamma {
    pub value: f64,
    pub underflow: bool,
}

/// `Gamma(a, x) = int_x^inf t^{a-1} e^{-t} dt` for any real `a` and `x > 0`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<IncompleteGamma> {
    if !(x > 0.0) || !a.is_finite() {
        return Err(Error::DomainError(format!("upper incomplete gamma needs x > 0, got a={a}, x={x}")));
    }
    if x > UNDERFLOW_X {
        return Ok(IncompleteGamma { value: 0.0, underflow: true });
    }
    Ok(IncompleteGamma { value: gamma_upper(a, x), underflow: false })
}

/// Unchecked `Gamma(a, x)` for `0 < x <= 700`.
pub(crate) fn gamma_upper(a: f64, x: f64) -> f64 {
    if a >= 1.0 && x < a + 1.0 {
        gamma(a) - (-x).exp() * x.powf(a) * lower_series(a, x)
    } else if x >= 1.5 {
        (-x).exp() * x.powf(a) * upper_cf(a, x)
    } else if a > -0.5 {
        temme_small_x(a, x)
    } else {
        // downward recurrence Gamma(a,x) = (Gamma(a+1,x) - x^a e^{-x}) / a
        let steps = (-0.5 - a).ceil() as usize;
        let a0 = a + steps as f64;
        let (a0, steps) = if a0 > -0.5 { (a0, steps) } else { (a0 + 1.0, steps + 1) };
        let mut g = temme_small_x(a0, x);
        let ex = (-x).exp();
        let mut b = a0;
        for _ in 0..steps {
            b -= 1.0;
            g = (g - x.powf(b) * ex) / b;
        }
        g
    }
}

/// `sum_{n>=0} x^n / (a (a+1) ... (a+n))`, so that `gamma(a,x) = e^{-x} x^a S`.
pub(crate) fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum
}

/// Modified Lentz continued fraction `h` with `Gamma(a,x) = e^{-x} x^a h`.
#[inline]
pub(crate) fn upper_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    if b.abs() < TINY {
        b = TINY;
    }
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// `Gamma(a,x)` for `-1/2 < a < 1` and small `x`, arranged so that the
/// `1/a` singularities of `Gamma(a)` and `gamma(a,x)` cancel analytically.
fn temme_small_x(a: f64, x: f64) -> f64 {
    let lx = x.ln();
    let (g1, xa1) = if a == 0.0 { (-EULER_GAMMA, lx) } else { (gamma1pm1(a) / a, (a * lx).exp_m1() / a) };
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_ITER {
        term *= -x / k as f64;
        let t = term / (a + k as f64);
        sum += t;
        if t.abs() < EPS * sum.abs() {
            break;
        }
    }
    g1 - xa1 - (a * lx).exp() * sum
}

/// `E_1(x) = int_1^inf e^{-xt}/t dt`.
pub fn exponential_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::DomainError(format!("E1 needs x > 0, got {x}")));
    }
    if x > UNDERFLOW_X {
        return Ok(0.0);
    }
    Ok(e1(x))
}

#[inline]
pub(crate) fn e1(x: f64) -> f64 {
    if x < 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..MAX_ITER {
            term *= -x / k as f64;
            let t = term / k as f64;
            sum += t;
            if t.abs() < EPS * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        (-x).exp() * upper_cf(0.0, x)
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) * rgamma(d as f64 / 2.0)
}

/// Rigorous tail bound for a radial sum over a (possibly shifted) lattice,
/// `sum_{|y| > radius} f(|y|)`, when `f(r) <= c r^{-2 inv_sq} e^{-beta r^2}` for `r >= radius - 2 cell`.
///
/// Each point is charged to its centered fundamental cell, which lies within
/// `cell` of the point, and the cells are integrated in polar coordinates.
pub(crate) fn gaussian_tail(dim: usize, density: f64, cell: f64, radius: f64, beta: f64, c: f64, inv_sq: bool) -> f64 {
    let rho0 = radius - 2.0 * cell;
    if !(rho0 > 0.0) {
        return f64::INFINITY;
    }
    let mut pref = c * sphere_area(dim) * density;
    if inv_sq {
        pref /= rho0 * rho0;
    }
    let x0 = beta * rho0 * rho0;
    if x0 > UNDERFLOW_X {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..dim {
        // binom = C(dim-1, k)
        let a = (k as f64 + 1.0) / 2.0;
        let moment = gamma_upper(a, x0) / (2.0 * beta.powf(a));
        sum += binom * cell.powi((dim - 1 - k) as i32) * moment;
        binom = binom * (dim - 1 - k) as f64 / (k + 1) as f64;
    }
    pref * sum
}

/// Estimated number of lattice points in a ball, used against `max_terms`.
pub(crate) fn ball_count_estimate(dim: usize, density: f64, cell: f64, radius: f64) -> f64 {
    let r = radius + cell;
    sphere_area(dim) / dim as f64 * r.powi(dim as i32) * density
}

/// Smallest radius (on a 1/40 grid of `scale`) whose tail bound is below `target`.
pub(crate) fn choose_radius(
    dim: usize,
    density: f64,
    cell: f64,
    max_terms: usize,
    target: f64,
    tail: impl Fn(f64) -> f64,
) -> Result<f64> {
    let step = 0.025 * cell.max(1e-3);
    let mut r = 2.0 * cell + step;
    loop {
        let b = tail(r);
        if b <= target {
            return Ok(r);
        }
        if ball_count_estimate(dim, density, cell, r) > max_terms as f64 {
            return Err(Error::ToleranceNotMet { bound: b, tol: target, max_terms });
        }
        r += step;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSumResult {
    pub value: f64,
    pub terms_used: usize,
    pub truncation_bound: f64,
}

/// `sum_{v in Lambda} e^{-t |v|^2}` with a rigorous truncation bound.
pub fn theta_direct(lattice: &Lattice, t: f64, control: &SummationControl) -> Result<ThetaSumResult> {
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("theta sum needs t > 0, got {t}")));
    }
    let d = lattice.dim();
    let density = 1.0 / lattice.covolume();
    let cell = lattice.cell_radius();
    let tail = |r: f64| gaussian_tail(d, density, cell, r, t, 1.0, false);
    let radius = match control.real_radius {
        Some(r) => r,
        None => choose_radius(d, density, cell, control.max_terms, control.abs_tol, tail)?,
    };
    let bound = tail(radius);
    if bound > control.abs_tol {
        return Err(Error::ToleranceNotMet { bound, tol: control.abs_tol, max_terms: control.max_terms });
    }
    let mut value = 0.0;
    let mut terms = 0;
    lattice.for_each_in_ball(radius, |_, _, n2| {
        value += (-t * n2).exp();
        terms += 1;
    });
    Ok(ThetaSumResult { value, terms_used: terms, truncation_bound: bound })
}

/// `sum_{w in Lambda*} e^{-pi^2 |w|^2 / t} t^{-d/2}`.
pub fn theta_dual(lattice: &Lattice, t: f64, control: &SummationControl) -> Result<ThetaSumResult> {
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("theta sum needs t > 0, got {t}")));
    }
    let dual = lattice.dual();
    let scale = t.powf(-(dual.dim() as f64) / 2.0);
    let inner = SummationControl {
        real_radius: control.dual_radius,
        dual_radius: None,
        abs_tol: control.abs_tol / scale,
        max_terms: control.max_terms,
    };
    let r = theta_direct(&dual, PI * PI / t, &inner)?;
    Ok(ThetaSumResult {
        value: r.value * scale,
        terms_used: r.terms_used,
        truncation_bound: r.truncation_bound * scale,
    })
}
