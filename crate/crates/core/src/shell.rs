//! Ball-truncated Riesz sums around an off-lattice point, renormalized by a
//! divergent shell sum, and weighted second moments of lattice shells.
//!
//! All sums run over the half space `{v : first nonzero coordinate of k > 0}`
//! and use the symmetry `v -> -v` of the ball. Slabs of fixed first coordinate
//! are summed in parallel and reduced in slab order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::special::ball_count_estimate;

/// Limit on the number of streamed lattice vectors in one shell computation.
pub const SHELL_CAP: usize = 4_000_000_000;

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `D_L = sum_{0<|v|<=L} |v|^{-s}`
    #[default]
    BallSum,
    /// `sum_{0<|v|<=L} |v|^{-(s+2)}`
    ProofSum,
}

#[inline]
fn inv_pow(n2: f64, half_s: f64) -> f64 {
    if half_s == 0.5 {
        1.0 / n2.sqrt()
    } else {
        n2.powf(-half_s)
    }
}

fn check_radius(lattice: &Lattice, radius: f64) -> Result<()> {
    if !(radius >= lattice.shortest_len() * (1.0 - 1e-12)) || !radius.is_finite() {
        return Err(Error::DomainError(format!(
            "radius {radius} is below the shortest vector length {}",
            lattice.shortest_len()
        )));
    }
    let est = ball_count_estimate(lattice.dim(), 1.0 / lattice.covolume(), lattice.cell_radius(), radius);
    if est > SHELL_CAP as f64 {
        return Err(Error::CapacityExceeded { cap: SHELL_CAP });
    }
    Ok(())
}

/// Visits the half-space vectors of the ball slab by slab in parallel; `init`
/// creates a per-slab accumulator and `merge` folds them in slab order.
fn half_space_fold<A, F, M>(lattice: &Lattice, radius: f64, init: impl Fn() -> A + Sync, visit: F, merge: M) -> A
where
    A: Send,
    F: Fn(&mut A, &[f64], f64) + Sync,
    M: Fn(&mut A, A),
{
    let h0 = lattice.first_half_width(radius);
    let slabs: Vec<A> = (0..=h0)
        .into_par_iter()
        .map(|k0| {
            let mut acc = init();
            lattice.scan_slabs(radius, k0, k0, |k, v, n2| {
                if k0 == 0 && k.iter().find(|&&c| c != 0).is_none_or(|&c| c < 0) {
                    return;
                }
                visit(&mut acc, v, n2);
            });
            acc
        })
        .collect();
    let mut it = slabs.into_iter();
    let mut total = it.next().unwrap_or_else(&init);
    for a in it {
        merge(&mut total, a);
    }
    total
}

/// `D_L = sum_{v in Lambda, 0 < |v| <= L} |v|^{-s}`.
pub fn shell_sum_dl(lattice: &Lattice, s: f64, radius: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::DomainError(format!("s must be positive, got {s}")));
    }
    check_radius(lattice, radius)?;
    let half_s = s / 2.0;
    let acc =
        half_space_fold(lattice, radius, Neumaier::default, |a, _, n2| a.add(inv_pow(n2, half_s)), |a, b| a.merge(&b));
    Ok(2.0 * acc.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellSweep {
    pub s: f64,
    /// Cartesian offset.
    pub x: Vec<f64>,
    pub radii: Vec<f64>,
    /// `|x|^{-s} + (1/2) sum_{0<|v|<=L} (|x+v|^{-s} + |x-v|^{-s} - 2|v|^{-s})`
    pub centered_sums: Vec<f64>,
    pub ball_sums: Vec<f64>,
    pub proof_sums: Vec<f64>,
    /// Centered sum over `D_L`.
    pub ratios: Vec<f64>,
    /// Centered sum over `sum |v|^{-(s+2)}`.
    pub proof_ratios: Vec<f64>,
    /// `-(s/d)(d-s-2)|x|^2`
    pub predicted_limit: f64,
}

impl ShellSweep {
    pub fn ratios_for(&self, norm: Normalization) -> &[f64] {
        match norm {
            Normalization::BallSum => &self.ratios,
            Normalization::ProofSum => &self.proof_ratios,
        }
    }

    /// `ratio - predicted_limit` for each radius.
    pub fn gaps(&self, norm: Normalization) -> Vec<f64> {
        self.ratios_for(norm).iter().map(|r| r - self.predicted_limit).collect()
    }

    /// Number of radii at which `|gap|` did not shrink.
    pub fn gap_inversions(&self, norm: Normalization) -> usize {
        self.gaps(norm).windows(2).filter(|w| w[1].abs() >= w[0].abs()).count()
    }

    /// CSV with header `L,D_L,ratio,predicted_limit,gap,proof_norm,proof_ratio,proof_gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,D_L,ratio,predicted_limit,gap,proof_norm,proof_ratio,proof_gap\n");
        let gaps = self.gaps(Normalization::BallSum);
        let pgaps = self.gaps(Normalization::ProofSum);
        for i in 0..self.radii.len() {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                self.radii[i],
                self.ball_sums[i],
                self.ratios[i],
                self.predicted_limit,
                gaps[i],
                self.proof_sums[i],
                self.proof_ratios[i],
                pgaps[i]
            ));
        }
        out
    }
}

/// `-(s/d)(d-s-2)|x|^2`.
pub fn predicted_limit(d: usize, s: f64, x: &[f64]) -> f64 {
    let df = d as f64;
    let x2: f64 = x.iter().map(|t| t * t).sum();
    -(s / df) * (df - s - 2.0) * x2 + 0.0
}

fn check_shell_args(lattice: &Lattice, s: f64, x: &[f64]) -> Result<()> {
    let d = lattice.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch(format!("x has {} components, lattice dimension is {d}", x.len())));
    }
    if !(s > 0.0 && s <= d as f64 - 2.0) {
        return Err(Error::DomainError(format!("need 0 < s <= d - 2 = {}, got {s}", d as f64 - 2.0)));
    }
    let frac = lattice.to_fractional(x);
    if frac.iter().all(|f| (f - f.round()).abs() < 1e-12) {
        return Err(Error::PointOnLattice);
    }
    Ok(())
}

#[derive(Clone, Copy, Default)]
struct Band {
    pair: Neumaier,
    ball: Neumaier,
    proof: Neumaier,
}

/// One pass over the ball of the largest radius, accumulating per radius band.
pub fn shell_sweep(lattice: &Lattice, s: f64, x: &[f64], radii: &[f64]) -> Result<ShellSweep> {
    check_shell_args(lattice, s, x)?;
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::DomainError("radii must be nonempty and strictly increasing".into()));
    }
    check_radius(lattice, radii[0])?;
    let r_max = *radii.last().unwrap();
    check_radius(lattice, r_max)?;
    let d = lattice.dim();
    let half_s = s / 2.0;
    let x2: f64 = x.iter().map(|t| t * t).sum();
    let bound2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let nb = radii.len();
    let bands = half_space_fold(
        lattice,
        r_max,
        || vec![Band::default(); nb],
        |acc, v, n2| {
            let b = bound2.partition_point(|&r2| r2 < n2);
            let xv: f64 = (0..d).map(|i| x[i] * v[i]).sum();
            let base = inv_pow(n2, half_s);
            let plus = (n2 + 2.0 * xv + x2).max(0.0);
            let minus = (n2 - 2.0 * xv + x2).max(0.0);
            let band = &mut acc[b];
            band.pair.add(inv_pow(plus, half_s) + inv_pow(minus, half_s) - 2.0 * base);
            band.ball.add(base);
            band.proof.add(base / n2);
        },
        |acc, other| {
            for (a, b) in acc.iter_mut().zip(&other) {
                a.pair.merge(&b.pair);
                a.ball.merge(&b.ball);
                a.proof.merge(&b.proof);
            }
        },
    );
    let mut pair = Neumaier::default();
    pair.add(inv_pow(x2, half_s));
    let mut ball = Neumaier::default();
    let mut proof = Neumaier::default();
    let mut sweep = ShellSweep {
        s,
        x: x.to_vec(),
        radii: radii.to_vec(),
        centered_sums: Vec::with_capacity(nb),
        ball_sums: Vec::with_capacity(nb),
        proof_sums: Vec::with_capacity(nb),
        ratios: Vec::with_capacity(nb),
        proof_ratios: Vec::with_capacity(nb),
        predicted_limit: predicted_limit(d, s, x),
    };
    for band in &bands {
        pair.merge(&band.pair);
        ball.merge(&band.ball);
        proof.merge(&band.proof);
        let c = pair.value();
        let dl = 2.0 * ball.value();
        let pl = 2.0 * proof.value();
        sweep.centered_sums.push(c);
        sweep.ball_sums.push(dl);
        sweep.proof_sums.push(pl);
        sweep.ratios.push(c / dl);
        sweep.proof_ratios.push(c / pl);
    }
    Ok(sweep)
}

/// The centered ball sum at radius `L` divided by the chosen normalizer.
pub fn renormalized_ratio(lattice: &Lattice, s: f64, x: &[f64], radius: f64, norm: Normalization) -> Result<f64> {
    let sweep = shell_sweep(lattice, s, x, &[radius])?;
    Ok(sweep.ratios_for(norm)[0])
}

/// Inner radius used for shell moments unless given: five shortest vector lengths.
pub fn default_inner_radius(lattice: &Lattice) -> f64 {
    5.0 * lattice.shortest_len()
}

/// All second moments `int z_i z_j dmu` of the measure putting mass `|v|^{-s}`
/// on `v/|v|` for lattice vectors with `inner < |v| <= outer`, normalized to 1.
pub fn sphere_moments(lattice: &Lattice, s: f64, inner: f64, outer: f64) -> Result<Vec<Vec<f64>>> {
    let d = lattice.dim();
    if !(s <= d as f64) {
        return Err(Error::DomainError(format!("need s <= d = {d}, got {s}")));
    }
    if !(inner >= 0.0 && inner < outer) {
        return Err(Error::DomainError(format!("need 0 <= inner < outer, got {inner} and {outer}")));
    }
    check_radius(lattice, outer)?;
    let inner2 = inner * inner;
    let half_s = s / 2.0;
    let acc = half_space_fold(
        lattice,
        outer,
        || vec![Neumaier::default(); d * d + 1],
        |acc, v, n2| {
            if n2 <= inner2 {
                return;
            }
            let w = inv_pow(n2, half_s);
            acc[d * d].add(w);
            let wn = w / n2;
            for i in 0..d {
                for j in i..d {
                    acc[i * d + j].add(wn * v[i] * v[j]);
                }
            }
        },
        |acc, other| {
            for (a, b) in acc.iter_mut().zip(&other) {
                a.merge(b);
            }
        },
    );
    let total = acc[d * d].value();
    if total == 0.0 {
        return Err(Error::EmptyShell);
    }
    let mut m = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let v = acc[i * d + j].value() / total;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

pub fn sphere_moment(lattice: &Lattice, s: f64, inner: f64, outer: f64, index: (usize, usize)) -> Result<f64> {
    let d = lattice.dim();
    if index.0 >= d || index.1 >= d {
        return Err(Error::DimensionMismatch(format!("moment index {index:?} out of range for dimension {d}")));
    }
    Ok(sphere_moments(lattice, s, inner, outer)?[index.0][index.1])
}

/// `|x+v|^{-s} + |x-v|^{-s} - 2|v|^{-s}` and its two-term large-`|v|` expansion
/// `-s |x|^2 / |v|^{s+2} + s(s+2) (x.v)^2 / |v|^{s+4}`.
pub fn pair_expansion(s: f64, x: &[f64], v: &[f64]) -> (f64, f64) {
    let half_s = s / 2.0;
    let x2: f64 = x.iter().map(|t| t * t).sum();
    let v2: f64 = v.iter().map(|t| t * t).sum();
    let xv: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let exact = inv_pow(v2 + 2.0 * xv + x2, half_s) + inv_pow(v2 - 2.0 * xv + x2, half_s) - 2.0 * inv_pow(v2, half_s);
    let base = inv_pow(v2, half_s);
    let expansion = -s * x2 * base / v2 + s * (s + 2.0) * xv * xv * base / (v2 * v2);
    (exact, expansion)
}
