//! Epstein and Epstein–Hurwitz zeta functions and the periodic potentials
//! `F_s`, `F_log`, evaluated by an Ewald split of the Mellin integral at `t = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::SummationControl;
use crate::error::{Error, Result};
use crate::exponent::RieszExponent;
use crate::lattice::{wrap_unit, Lattice, TorusPoint};
use crate::special::{
    choose_radius, e1, gamma, gamma_upper, gaussian_tail, lower_series, rgamma, upper_cf, EULER_GAMMA, UNDERFLOW_X,
};

/// Largest dimension supported by the evaluators.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialValue {
    pub value: f64,
    pub error_bound: f64,
}

/// Real-space kernel `phi(u)` with `u = r^2`.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    /// `r^{-s} Gamma(s/2, r^2) / Gamma(s/2)`
    Riesz { a: f64, rg: f64 },
    /// `E_1(r^2)`
    Log,
}

impl Kernel {
    #[inline]
    fn value(&self, u: f64) -> f64 {
        if u > UNDERFLOW_X {
            return 0.0;
        }
        match *self {
            Kernel::Riesz { a, rg } => {
                if a >= 1.0 && u < a + 1.0 {
                    u.powf(-a) - (-u).exp() * lower_series(a, u) * rg
                } else if u >= 1.5 {
                    (-u).exp() * upper_cf(a, u) * rg
                } else {
                    u.powf(-a) * gamma_upper(a, u) * rg
                }
            }
            Kernel::Log => e1(u),
        }
    }

    /// `(phi(u), dphi/du)`.
    #[inline]
    fn value_deriv(&self, u: f64) -> (f64, f64) {
        if u > UNDERFLOW_X {
            return (0.0, 0.0);
        }
        let eu = (-u).exp();
        match *self {
            Kernel::Riesz { a, rg } => {
                let phi = if a >= 1.0 && u < a + 1.0 {
                    u.powf(-a) - eu * lower_series(a, u) * rg
                } else if u >= 1.5 {
                    eu * upper_cf(a, u) * rg
                } else {
                    u.powf(-a) * gamma_upper(a, u) * rg
                };
                (phi, -(a * phi + eu * rg) / u)
            }
            Kernel::Log => (e1(u), -eu / u),
        }
    }
}

/// Precomputed Ewald sum for one lattice and one exponent.
///
/// The real-space image list and the dual coefficients are built once so the
/// evaluator can be reused for many points (energies, quadrature grids).
#[derive(Debug, Clone)]
pub struct EwaldEvaluator {
    lattice: Lattice,
    dim: usize,
    kernel: Kernel,
    real_radius: f64,
    dual_radius: f64,
    real_cut2: f64,
    images: Vec<f64>,
    dual_k: Vec<f64>,
    dual_w: Vec<f64>,
    dual_coef: Vec<f64>,
    real_bound: f64,
    dual_bound: f64,
    min_dist2: f64,
    table: Option<KernelTable>,
}

/// Cubic Hermite table of the real-space kernel on a uniform grid in `r`.
///
/// Used only by the descent loops; the interpolant is C1 and its derivative is
/// used as the gradient, so line searches see a consistent smooth energy.
#[derive(Debug, Clone)]
struct KernelTable {
    r_lo: f64,
    inv_h: f64,
    h: f64,
    // interleaved (phi, dphi/dr) at the nodes
    nodes: Vec<f64>,
}

impl KernelTable {
    fn build(kernel: Kernel, r_lo: f64, r_hi: f64, max_err: f64) -> Self {
        let node = |r: f64| {
            let (p, dp) = kernel.value_deriv(r * r);
            (p, 2.0 * r * dp)
        };
        let mut n = 1024usize;
        loop {
            let h = (r_hi - r_lo) / n as f64;
            let mut nodes = Vec::with_capacity(2 * (n + 2));
            for i in 0..=n + 1 {
                let (p, dp) = node(r_lo + i as f64 * h);
                nodes.push(p);
                nodes.push(dp);
            }
            let table = KernelTable { r_lo, inv_h: 1.0 / h, h, nodes };
            let worst = (0..n)
                .map(|i| {
                    let r = r_lo + (i as f64 + 0.5) * h;
                    (table.eval(r).0 - kernel.value(r * r)).abs()
                })
                .fold(0.0, f64::max);
            if worst <= max_err || n >= 1 << 20 {
                return table;
            }
            n *= 2;
        }
    }

    /// `(phi(r), dphi/dr)` for `r_lo <= r <= r_hi`.
    #[inline]
    fn eval(&self, r: f64) -> (f64, f64) {
        let x = (r - self.r_lo) * self.inv_h;
        let i = x as usize;
        let t = x - i as f64;
        let c = &self.nodes[2 * i..2 * i + 4];
        let (p0, d0, p1, d1) = (c[0], c[1] * self.h, c[2], c[3] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v =
            (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * d0 + (3.0 * t2 - 2.0 * t3) * p1 + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * (p0 - p1) + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv * self.inv_h)
    }
}

impl EwaldEvaluator {
    /// Evaluator for `F_s` (Riesz) or `F_log`.
    pub fn new(lattice: &Lattice, exponent: RieszExponent, control: &SummationControl) -> Result<Self> {
        match exponent {
            RieszExponent::Riesz(s) => Self::build(lattice, Some(s), control),
            RieszExponent::Log => Self::build(lattice, None, control),
        }
    }

    /// Evaluator for the Riesz split at any real `s` (used by the continuations).
    pub fn for_real_s(lattice: &Lattice, s: f64, control: &SummationControl) -> Result<Self> {
        Self::build(lattice, Some(s), control)
    }

    fn build(lattice: &Lattice, s: Option<f64>, control: &SummationControl) -> Result<Self> {
        control.validate()?;
        let d = lattice.dim();
        if d > MAX_DIM {
            return Err(Error::DimensionMismatch(format!("dimension {d} exceeds {MAX_DIM}")));
        }
        if let Some(s) = s {
            if !s.is_finite() {
                return Err(Error::DomainError(format!("non-finite exponent {s}")));
            }
        }
        let df = d as f64;
        let covol = lattice.covolume();
        let dual = lattice.dual();
        let cell = lattice.cell_radius();
        let dual_cell = dual.cell_radius();

        let kernel = match s {
            Some(s) => Kernel::Riesz { a: s / 2.0, rg: rgamma(s / 2.0) },
            None => Kernel::Log,
        };
        // real terms: phi(r) <= c_real r^{-2} e^{-r^2} once r^2 >= u_real
        let (c_real, u_real) = match kernel {
            Kernel::Riesz { a, rg } if a > 1.0 => (2.0 * rg.abs(), 2.0 * (a - 1.0)),
            Kernel::Riesz { rg, .. } => (rg.abs(), 0.0),
            Kernel::Log => (1.0, 0.0),
        };
        // dual terms: |coef(w)| <= k_dual y^{-b} Gamma(b, y), y = pi^2 |w|^2
        let (b, k_dual) = match s {
            Some(s) => ((df - s) / 2.0, PI.powf(df / 2.0) / covol * rgamma(s / 2.0).abs()),
            None => (df / 2.0, PI.powf(df / 2.0) / covol),
        };
        let (c_b, y_min) = if b > 1.0 { (2.0, 2.0 * (b - 1.0)) } else { (1.0, 0.0) };

        let real_tail = |r: f64| {
            let rho0 = r - 2.0 * cell;
            if rho0 * rho0 < u_real {
                return f64::INFINITY;
            }
            gaussian_tail(d, 1.0 / covol, cell, r, 1.0, c_real, true)
        };
        let dual_tail = |r: f64| {
            let rho0 = r - 2.0 * dual_cell;
            if PI * PI * rho0 * rho0 < y_min {
                return f64::INFINITY;
            }
            gaussian_tail(d, covol, dual_cell, r, PI * PI, k_dual * c_b / (PI * PI), true)
        };
        let half = control.abs_tol / 2.0;
        let real_radius = match control.real_radius {
            Some(r) => r,
            None => choose_radius(d, 1.0 / covol, cell, control.max_terms, half, real_tail)?,
        };
        let dual_radius = match control.dual_radius {
            Some(r) => r,
            None => choose_radius(d, covol, dual_cell, control.max_terms, half, dual_tail)?,
        };
        let real_bound = real_tail(real_radius);
        let dual_bound = dual_tail(dual_radius);
        if real_bound + dual_bound > control.abs_tol {
            return Err(Error::ToleranceNotMet {
                bound: real_bound + dual_bound,
                tol: control.abs_tol,
                max_terms: control.max_terms,
            });
        }

        // evaluation points are centered to frac in [-1/2, 1/2)^d, so |y| <= cell
        let reach = real_radius + cell;
        let mut images = Vec::new();
        let mut count = 0usize;
        lattice.for_each_in_ball(reach, |_, v, _| {
            images.extend_from_slice(v);
            count += 1;
        });
        if count > control.max_terms {
            return Err(Error::CapacityExceeded { cap: control.max_terms });
        }

        let mut dual_k = Vec::new();
        let mut dual_w = Vec::new();
        let mut dual_coef = Vec::new();
        let prefactor = PI.powf(df / 2.0) / covol;
        let mut dual_count = 0usize;
        dual.for_each_in_ball(dual_radius, |k, w, n2| {
            // one representative per +-w pair: first nonzero coordinate positive
            match k.iter().find(|&&c| c != 0) {
                Some(&c) if c > 0 => {}
                _ => return,
            }
            dual_count += 1;
            let y = PI * PI * n2;
            let scaled = if y > UNDERFLOW_X { 0.0 } else { gamma_upper(b, y) * y.powf(-b) };
            let coef = match s {
                Some(s) => prefactor * scaled * rgamma(s / 2.0),
                None => prefactor * scaled,
            };
            dual_k.extend(k.iter().map(|&c| c as f64));
            dual_w.extend_from_slice(w);
            dual_coef.push(2.0 * coef);
        });
        if dual_count > control.max_terms {
            return Err(Error::CapacityExceeded { cap: control.max_terms });
        }

        let l0 = lattice.shortest_len();
        Ok(EwaldEvaluator {
            lattice: lattice.clone(),
            dim: d,
            kernel,
            real_radius,
            dual_radius,
            real_cut2: real_radius * real_radius,
            images,
            dual_k,
            dual_w,
            dual_coef,
            real_bound,
            dual_bound,
            min_dist2: (1e-9 * l0).powi(2),
            table: None,
        })
    }

    /// Replaces the real-space kernel by a cubic Hermite table for `r >= l0 / 5`
    /// with pointwise error below `max_err`; closer separations stay exact.
    pub fn tabulated(mut self, max_err: f64) -> Self {
        let r_lo = 0.2 * self.lattice.shortest_len();
        if r_lo < self.real_radius {
            self.table = Some(KernelTable::build(self.kernel, r_lo, self.real_radius, max_err));
        }
        self
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Sum of the real and dual truncation bounds for one evaluation.
    pub fn error_bound(&self) -> f64 {
        self.real_bound + self.dual_bound
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.real_radius, self.dual_radius)
    }

    pub fn term_counts(&self) -> (usize, usize) {
        (self.images.len() / self.dim, self.dual_coef.len())
    }

    /// The periodic potential at a point given in (unreduced) fractional coordinates.
    pub fn potential(&self, frac: &[f64]) -> Result<PotentialValue> {
        let mut scratch = [0.0; MAX_DIM];
        let value = self.eval::<false>(frac, &mut scratch)?;
        Ok(PotentialValue { value, error_bound: self.error_bound() })
    }

    /// The potential and its Cartesian gradient; `grad` must have length `d`.
    pub fn value_and_gradient(&self, frac: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.eval::<true>(frac, grad)
    }

    #[inline]
    fn eval<const GRAD: bool>(&self, frac: &[f64], grad: &mut [f64]) -> Result<f64> {
        let d = self.dim;
        debug_assert_eq!(frac.len(), d);
        let mut f = [0.0; MAX_DIM];
        for i in 0..d {
            f[i] = wrap_unit(frac[i]);
            if f[i] >= 0.5 {
                f[i] -= 1.0;
            }
        }
        let mut y = [0.0; MAX_DIM];
        self.lattice.frac_to_cart(&f[..d], &mut y[..d]);
        if GRAD {
            grad[..d].iter_mut().for_each(|g| *g = 0.0);
        }

        let mut real = 0.0;
        let mut z = [0.0; MAX_DIM];
        for img in self.images.chunks_exact(d) {
            let mut r2 = 0.0;
            for i in 0..d {
                z[i] = y[i] + img[i];
                r2 += z[i] * z[i];
            }
            if r2 > self.real_cut2 {
                continue;
            }
            if r2 < self.min_dist2 {
                return Err(Error::PointOnLattice);
            }
            match &self.table {
                Some(tab) if r2 >= tab.r_lo * tab.r_lo => {
                    let r = r2.sqrt();
                    let (phi, dphi) = tab.eval(r);
                    real += phi;
                    if GRAD {
                        for i in 0..d {
                            grad[i] += dphi * z[i] / r;
                        }
                    }
                }
                _ if GRAD => {
                    let (phi, dphi) = self.kernel.value_deriv(r2);
                    real += phi;
                    for i in 0..d {
                        grad[i] += 2.0 * dphi * z[i];
                    }
                }
                _ => real += self.kernel.value(r2),
            }
        }

        let mut recip = 0.0;
        for (j, coef) in self.dual_coef.iter().enumerate() {
            let k = &self.dual_k[j * d..(j + 1) * d];
            let phase = 2.0 * PI * (0..d).map(|i| k[i] * f[i]).sum::<f64>();
            if GRAD {
                let (sn, cs) = phase.sin_cos();
                recip += coef * cs;
                let w = &self.dual_w[j * d..(j + 1) * d];
                for i in 0..d {
                    grad[i] -= 2.0 * PI * coef * sn * w[i];
                }
            } else {
                recip += coef * phase.cos();
            }
        }
        Ok(real + recip)
    }

    /// The split sums at the origin with the `v = 0` term removed:
    /// `sum_{v != 0} phi(|v|^2) + sum_{w != 0} coef(w)`.
    fn origin_sum(&self) -> f64 {
        let d = self.dim;
        let mut real = 0.0;
        for img in self.images.chunks_exact(d) {
            let r2: f64 = img.iter().map(|t| t * t).sum();
            if r2 > 0.0 && r2 <= self.real_cut2 {
                real += self.kernel.value(r2);
            }
        }
        real + self.dual_coef.iter().sum::<f64>()
    }
}

fn check_not_pole(lattice: &Lattice, s: f64) -> Result<()> {
    let d = lattice.dim() as f64;
    if (s - d).abs() <= 1e-14 * d {
        return Err(Error::PoleAtD(lattice.dim()));
    }
    Ok(())
}

fn check_off_lattice(lattice: &Lattice, x: &TorusPoint) -> Result<()> {
    if x.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point of dimension {} on a {}-dimensional lattice",
            x.dim(),
            lattice.dim()
        )));
    }
    if x.frac().iter().all(|&f| f < 1e-12 || f > 1.0 - 1e-12) {
        return Err(Error::PointOnLattice);
    }
    Ok(())
}

/// `I_{s,Lambda} = 2 pi^{d/2} / (|Lambda| Gamma(s/2) (d - s))`, the shift between `F_s` and `zeta(s; .)`.
pub fn continuous_constant(lattice: &Lattice, s: f64) -> f64 {
    let d = lattice.dim() as f64;
    2.0 * PI.powf(d / 2.0) * rgamma(s / 2.0) / (lattice.covolume() * (d - s))
}

/// `2 pi^{d/2} / (d |Lambda|)`, the shift between `F_log` and `2 zeta'(0; .)`.
pub fn log_constant(lattice: &Lattice) -> f64 {
    let d = lattice.dim() as f64;
    2.0 * PI.powf(d / 2.0) / (d * lattice.covolume())
}

/// The continued Epstein zeta function `zeta_Lambda(s)`.
pub fn epstein_zeta(lattice: &Lattice, s: f64, control: &SummationControl) -> Result<PotentialValue> {
    check_not_pole(lattice, s)?;
    if s == 0.0 {
        return Ok(PotentialValue { value: -1.0, error_bound: 0.0 });
    }
    let ev = EwaldEvaluator::for_real_s(lattice, s, control)?;
    let d = lattice.dim() as f64;
    let constant = rgamma(s / 2.0) * (2.0 * PI.powf(d / 2.0) / (lattice.covolume() * (s - d)) - 2.0 / s);
    Ok(PotentialValue { value: constant + ev.origin_sum(), error_bound: ev.error_bound() })
}

/// The continued Epstein–Hurwitz zeta function `zeta_Lambda(s; x)`.
pub fn epstein_hurwitz(
    lattice: &Lattice,
    s: f64,
    x: &TorusPoint,
    control: &SummationControl,
) -> Result<PotentialValue> {
    check_not_pole(lattice, s)?;
    check_off_lattice(lattice, x)?;
    if s == 0.0 {
        return Ok(PotentialValue { value: 0.0, error_bound: 0.0 });
    }
    let ev = EwaldEvaluator::for_real_s(lattice, s, control)?;
    let f = ev.potential(x.frac())?;
    Ok(PotentialValue { value: f.value - continuous_constant(lattice, s), error_bound: f.error_bound })
}

/// `F_{s,Lambda}(x)` or `F_{log,Lambda}(x)`.
pub fn periodic_potential(
    lattice: &Lattice,
    exponent: RieszExponent,
    x: &TorusPoint,
    control: &SummationControl,
) -> Result<PotentialValue> {
    check_off_lattice(lattice, x)?;
    if let RieszExponent::Riesz(s) = exponent {
        if !(s > 0.0) {
            return Err(Error::DomainError(format!("Riesz exponent must be positive, got {s}")));
        }
    }
    EwaldEvaluator::new(lattice, exponent, control)?.potential(x.frac())
}

/// `zeta'_Lambda(0; x)`, or `zeta'_Lambda(0)` when `x` is `None`, by
/// term-wise differentiation of the split at `s = 0`.
pub fn zeta_prime_at_zero(
    lattice: &Lattice,
    x: Option<&TorusPoint>,
    control: &SummationControl,
) -> Result<PotentialValue> {
    let d = lattice.dim() as f64;
    let half_log = PI.powf(d / 2.0) / (d * lattice.covolume());
    match x {
        Some(x) => {
            check_off_lattice(lattice, x)?;
            let ev = EwaldEvaluator::new(lattice, RieszExponent::Log, control)?;
            let f = ev.potential(x.frac())?;
            Ok(PotentialValue { value: f.value / 2.0 - half_log, error_bound: f.error_bound / 2.0 })
        }
        None => {
            let ev = EwaldEvaluator::new(lattice, RieszExponent::Log, control)?;
            let h_reg = -2.0 * half_log + ev.origin_sum();
            Ok(PotentialValue { value: -EULER_GAMMA / 2.0 + h_reg / 2.0, error_bound: ev.error_bound() / 2.0 })
        }
    }
}

/// Central-difference `d/ds` at `s = 0` with one Richardson step (steps `1e-4` and `2e-4`).
pub fn zeta_prime_finite_difference(
    lattice: &Lattice,
    x: Option<&TorusPoint>,
    control: &SummationControl,
) -> Result<PotentialValue> {
    let inner = SummationControl { abs_tol: control.abs_tol.min(1e-13), ..*control };
    let eval = |s: f64| match x {
        Some(x) => epstein_hurwitz(lattice, s, x, &inner),
        None => epstein_zeta(lattice, s, &inner),
    };
    let h = 1e-4;
    let diff = |h: f64| -> Result<(f64, f64)> {
        let p = eval(h)?;
        let m = eval(-h)?;
        Ok(((p.value - m.value) / (2.0 * h), (p.error_bound + m.error_bound) / (2.0 * h)))
    };
    let (d1, e1) = diff(h)?;
    let (d2, e2) = diff(2.0 * h)?;
    Ok(PotentialValue { value: (4.0 * d1 - d2) / 3.0, error_bound: (4.0 * e1 + e2) / 3.0 + (d1 - d2).abs() / 3.0 })
}

/// `sum_v |x+v|^{-s} e^{-a|x+v|^2} - C_a + I_{s,Lambda}`, which tends to `F_{s,Lambda}(x)` as `a -> 0`.
///
/// `C_a = |Lambda|^{-1} int |y|^{-s} e^{-a|y|^2} dy` alone would leave the
/// classical potential `zeta(s; x)` in the limit; adding back `I_{s,Lambda}`
/// targets `F_s`.
pub fn gaussian_regularized_potential(
    lattice: &Lattice,
    s: f64,
    a: f64,
    x: &TorusPoint,
    control: &SummationControl,
) -> Result<f64> {
    control.validate()?;
    let d = lattice.dim();
    let df = d as f64;
    if !(s > 0.0 && s < df) {
        return Err(Error::DomainError(format!("need 0 < s < d, got s = {s}")));
    }
    if !(a > 0.0) {
        return Err(Error::DomainError(format!("need a > 0, got {a}")));
    }
    check_off_lattice(lattice, x)?;
    let covol = lattice.covolume();
    let cell = lattice.cell_radius();
    let tail = |r: f64| {
        let rho0 = r - 2.0 * cell;
        if rho0 <= 0.0 {
            return f64::INFINITY;
        }
        gaussian_tail(d, 1.0 / covol, cell, r, a, rho0.powf(-s), false)
    };
    let radius = match control.real_radius {
        Some(r) => r,
        None => choose_radius(d, 1.0 / covol, cell, control.max_terms, control.abs_tol, tail)?,
    };
    let y = lattice.to_cartesian(x.frac());
    let r2max = radius * radius;
    let min2 = (1e-9 * lattice.shortest_len()).powi(2);
    let mut sum = 0.0;
    let mut hit = false;
    lattice.for_each_in_ball(radius + lattice.corner_radius(), |_, v, _| {
        let r2: f64 = y.iter().zip(v).map(|(p, q)| (p + q) * (p + q)).sum();
        if r2 < min2 {
            hit = true;
        } else if r2 <= r2max {
            sum += r2.powf(-s / 2.0) * (-a * r2).exp();
        }
    });
    if hit {
        return Err(Error::PointOnLattice);
    }
    let c_a = PI.powf(df / 2.0) * gamma((df - s) / 2.0) * rgamma(df / 2.0) * a.powf((s - df) / 2.0) / covol;
    Ok(sum - c_a + continuous_constant(lattice, s))
}

fn zero_mean_integrand(ev: &EwaldEvaluator, exponent: RieszExponent, frac: &[f64]) -> Result<f64> {
    let lattice = ev.lattice();
    let f = ev.potential(frac)?.value;
    Ok(match exponent {
        RieszExponent::Riesz(s) => f - continuous_constant(lattice, s),
        RieszExponent::Log => f / 2.0 - log_constant(lattice) / 2.0,
    })
}

/// Midpoint-rule value of `int_Omega zeta(s; x) dx` (or of `zeta'(0; x)` for
/// the log case) on a grid of `(2^level)^d` cells.
pub fn midpoint_mean(lattice: &Lattice, exponent: RieszExponent, level: u32) -> Result<f64> {
    let d = lattice.dim();
    if let RieszExponent::Riesz(s) = exponent {
        if !(s > 0.0 && s < d as f64) {
            return Err(Error::DomainError(format!("need 0 < s < d, got s = {s}")));
        }
    }
    let ev = EwaldEvaluator::new(lattice, exponent, &SummationControl::default())?;
    let n = 1usize << level;
    let total = n.checked_pow(d as u32).ok_or(Error::CapacityExceeded { cap: usize::MAX })?;
    let mut frac = vec![0.0; d];
    let mut sum = 0.0;
    for idx in 0..total {
        let mut rem = idx;
        for i in (0..d).rev() {
            frac[i] = ((rem % n) as f64 + 0.5) / n as f64;
            rem /= n;
        }
        sum += zero_mean_integrand(&ev, exponent, &frac)?;
    }
    Ok(sum / total as f64 * lattice.covolume())
}

/// Zero-mean check: the midpoint value at `level`, with its leading
/// `h^{d-s}` (Riesz) or `h^d` (log) error removed by one Richardson step
/// against `level - 1`.
pub fn mean_value_check(lattice: &Lattice, exponent: RieszExponent, level: u32) -> Result<f64> {
    if level == 0 {
        return Err(Error::DomainError("quadrature level must be at least 1".into()));
    }
    let fine = midpoint_mean(lattice, exponent, level)?;
    let coarse = midpoint_mean(lattice, exponent, level - 1)?;
    let d = lattice.dim() as f64;
    let p = match exponent {
        RieszExponent::Riesz(s) => d - s,
        RieszExponent::Log => d,
    };
    let r = 2f64.powf(p);
    Ok((r * fine - coarse) / (r - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zeta_z_two() {
        let v = epstein_zeta(&Lattice::cubic(1), 2.0, &SummationControl::default()).unwrap();
        assert!((v.value - PI * PI / 3.0).abs() < 1e-10, "{v:?}");
    }

    #[test]
    fn special_values_at_zero() {
        let c = SummationControl::default();
        assert_eq!(epstein_zeta(&Lattice::hexagonal(), 0.0, &c).unwrap().value, -1.0);
        let x = TorusPoint::new(&[0.2, 0.7]);
        assert_eq!(epstein_hurwitz(&Lattice::cubic(2), 0.0, &x, &c).unwrap().value, 0.0);
    }

    #[test]
    fn pole_and_lattice_point_rejected() {
        let c = SummationControl::default();
        assert_eq!(epstein_zeta(&Lattice::cubic(2), 2.0, &c), Err(Error::PoleAtD(2)));
        let o = TorusPoint::origin(2);
        assert_eq!(epstein_hurwitz(&Lattice::cubic(2), 1.0, &o, &c), Err(Error::PointOnLattice));
    }

    #[test]
    fn log_derivative_of_z() {
        let c = SummationControl::default();
        let v = zeta_prime_at_zero(&Lattice::cubic(1), None, &c).unwrap();
        assert_relative_eq!(v.value, -(2.0 * PI).ln(), epsilon = 1e-10);
        let x = TorusPoint::new(&[0.5]);
        let v = zeta_prime_at_zero(&Lattice::cubic(1), Some(&x), &c).unwrap();
        assert_relative_eq!(v.value, -(2f64).ln(), epsilon = 1e-10);
    }

    #[test]
    fn gradient_matches_difference_quotient() {
        let l = Lattice::hexagonal();
        let ev = EwaldEvaluator::new(&l, RieszExponent::Riesz(1.0), &SummationControl::default()).unwrap();
        let f = [0.31, 0.42];
        let mut g = [0.0; 2];
        ev.value_and_gradient(&f, &mut g).unwrap();
        let y = l.to_cartesian(&f);
        let h = 1e-6;
        for i in 0..2 {
            let mut yp = y.clone();
            yp[i] += h;
            let mut ym = y.clone();
            ym[i] -= h;
            let fp = ev.potential(&l.to_fractional(&yp)).unwrap().value;
            let fm = ev.potential(&l.to_fractional(&ym)).unwrap().value;
            assert_relative_eq!(g[i], (fp - fm) / (2.0 * h), epsilon = 1e-7);
        }
    }
}
