//! Reference routines that share no code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Borwein weights `d_k` for accelerating alternating series of moment sequences.
fn borwein_weights(n: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(n + 1);
    let mut term = 1.0 / n as f64; // i = 0 term of n * sum (n+i-1)! 4^i / ((n-i)! (2i)!)
    let mut acc = 0.0;
    for i in 0..=n {
        if i > 0 {
            let fi = i as f64;
            let nf = n as f64;
            term *= (nf + fi - 1.0) * 4.0 * (nf - fi + 1.0) / ((2.0 * fi - 1.0) * (2.0 * fi));
        }
        acc += term;
        d.push(n as f64 * acc);
    }
    d
}

/// `sum_{k>=0} (-1)^k a(k)`, accurate to roughly `5.8^{-n}` relative.
fn alternating_sum(a: impl Fn(usize) -> f64) -> f64 {
    let n = 60;
    let d = borwein_weights(n);
    let mut s = 0.0;
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * (d[n] - d[k]) * a(k);
    }
    s / d[n]
}

/// Riemann zeta for real `s != 1`, `s > 0`, through the alternating eta series.
pub fn riemann_zeta(s: f64) -> f64 {
    let eta = alternating_sum(|k| ((k + 1) as f64).powf(-s));
    eta / (1.0 - 2f64.powf(1.0 - s))
}

/// Dirichlet beta `sum (-1)^k (2k+1)^{-s}`.
pub fn dirichlet_beta(s: f64) -> f64 {
    alternating_sum(|k| ((2 * k + 1) as f64).powf(-s))
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// `int_x^inf t^{a-1} e^{-t} dt` for `x > 0` by the substitution `t = x / u`.
pub fn upper_gamma_quadrature(a: f64, x: f64) -> f64 {
    let f = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let t = x / u;
        t.powf(a - 1.0) * (-t).exp() * x / (u * u)
    };
    let rough = simpson(&f, 0.0, 1.0, 1e-6);
    simpson(&f, 0.0, 1.0, 1e-14 * rough.abs())
}

/// Direct sum of `|x + v|^{-s}` over a rectangular-box lattice `Z^d`
/// (only `d` in {1, 2}) with a two-sided cell-charging tail bracket.
///
/// Returns `(estimate, bound)`: the truncated sum over `|x+v| <= r` plus the
/// midpoint of the tail bracket, and half its width.
pub fn direct_hurwitz_cubic(d: usize, s: f64, x: &[f64], r: f64) -> (f64, f64) {
    assert!(s > d as f64);
    let h = r.ceil() as i64 + 2;
    let mut terms = Vec::new();
    match d {
        1 => {
            for n in -h..=h {
                let y = (x[0] + n as f64).abs();
                if y <= r && y > 0.0 {
                    terms.push(y.powf(-s));
                }
            }
        }
        2 => {
            for a in -h..=h {
                for b in -h..=h {
                    let y2 = (x[0] + a as f64).powi(2) + (x[1] + b as f64).powi(2);
                    if y2 <= r * r && y2 > 0.0 {
                        terms.push(y2.powf(-s / 2.0));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    // smallest terms first
    terms.sort_by(f64::total_cmp);
    let sum: f64 = terms.iter().sum();
    // every point outside radius r owns a unit cell within distance delta of it
    let delta = (d as f64).sqrt() / 2.0;
    let (lo, hi) = match d {
        1 => {
            // cells on both sides of the origin
            let lo = 2.0 * (r + 2.0 * delta).powf(1.0 - s) / (s - 1.0);
            let hi = 2.0 * (r - 2.0 * delta).powf(1.0 - s) / (s - 1.0);
            (lo, hi)
        }
        _ => {
            // int_{rho > R} 2 pi rho (rho + c)^{-s} d rho with rho + c = u
            let poly = |u0: f64, c: f64| 2.0 * PI * (u0.powf(2.0 - s) / (s - 2.0) - c * u0.powf(1.0 - s) / (s - 1.0));
            let lo = poly(r + 2.0 * delta, delta);
            let hi = poly(r - 2.0 * delta, -delta);
            (lo, hi)
        }
    };
    (sum + 0.5 * (lo + hi), 0.5 * (hi - lo).abs())
}

/// Central difference of `f` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Count of integer vectors in `[-h, h]^d` with Euclidean norm `<= r`, by nested loops.
pub fn box_count(d: usize, r: f64) -> usize {
    let h = r.floor() as i64;
    let mut k = vec![-h; d];
    let mut count = 0;
    loop {
        let n2: i64 = k.iter().map(|c| c * c).sum();
        if (n2 as f64) <= r * r {
            count += 1;
        }
        let mut l = d;
        loop {
            if l == 0 {
                return count;
            }
            l -= 1;
            if k[l] < h {
                k[l] += 1;
                break;
            }
            k[l] = -h;
        }
    }
}
