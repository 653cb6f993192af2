//! Full-rank lattices `A Z^d`, points on the flat torus and configurations.
//!
//! Points are stored in fractional coordinates with respect to the columns of
//! the generator; Cartesian coordinates are derived on demand.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default hard cap on the number of vectors an enumeration may produce.
pub const DEFAULT_CAP: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    generator: DMatrix<f64>,
    dual_generator: DMatrix<f64>,
    covolume: f64,
    shortest_len: f64,
    // row-major copies for the hot loops
    gen_flat: Vec<f64>,
    inv_flat: Vec<f64>,
}

/// Wire form: `{"dim": d, "generator": [row-major entries]}`.
#[derive(Serialize, Deserialize)]
struct LatticeWire {
    dim: usize,
    generator: Vec<f64>,
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeWire { dim: self.dim, generator: self.gen_flat.clone() }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let w = LatticeWire::deserialize(de)?;
        Lattice::from_row_major(w.dim, &w.generator).map_err(serde::de::Error::custom)
    }
}

impl Lattice {
    /// Builds a lattice from a square generator whose columns are the basis vectors.
    pub fn new(generator: DMatrix<f64>) -> Result<Self> {
        let (r, c) = generator.shape();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!("generator is {r}x{c}")));
        }
        if generator.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("generator has non-finite entries".into()));
        }
        let d = r;
        let det = generator.determinant();
        let col_prod: f64 = (0..d).map(|j| generator.column(j).norm()).product();
        if !(det.abs() > 1e-12 * col_prod) {
            return Err(Error::SingularMatrix);
        }
        let inverse = generator.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let dual_generator = inverse.transpose();
        let mut gen_flat = Vec::with_capacity(d * d);
        let mut inv_flat = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                gen_flat.push(generator[(i, j)]);
                inv_flat.push(inverse[(i, j)]);
            }
        }
        let mut lat =
            Lattice { dim: d, generator, dual_generator, covolume: det.abs(), shortest_len: 0.0, gen_flat, inv_flat };
        lat.shortest_len = lat.search_shortest();
        Ok(lat)
    }

    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!("{} entries for a {dim}x{dim} generator", entries.len())));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// `Z^d`.
    pub fn cubic(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is nonsingular")
    }

    /// Hexagonal lattice scaled to co-volume 1.
    pub fn hexagonal() -> Self {
        let c = (2.0 / 3f64.sqrt()).sqrt();
        Self::from_row_major(2, &[c, c / 2.0, 0.0, c * 3f64.sqrt() / 2.0]).expect("hexagonal generator is nonsingular")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn dual_generator(&self) -> &DMatrix<f64> {
        &self.dual_generator
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    pub fn shortest_len(&self) -> f64 {
        self.shortest_len
    }

    pub fn dual(&self) -> Lattice {
        Lattice::new(self.dual_generator.clone()).expect("dual of a valid lattice is valid")
    }

    /// The lattice `m * self`.
    pub fn scaled(&self, m: f64) -> Result<Lattice> {
        Lattice::new(&self.generator * m)
    }

    pub fn to_cartesian(&self, frac: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.frac_to_cart(frac, &mut out);
        out
    }

    pub fn to_fractional(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.inv_flat[i * d + j] * x[j]).sum()).collect()
    }

    #[inline]
    pub(crate) fn frac_to_cart(&self, frac: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.gen_flat[i * d..(i + 1) * d];
            out[i] = row.iter().zip(frac).map(|(a, f)| a * f).sum();
        }
    }

    /// Maps a Cartesian vector to fractional coordinates (`A^{-1} x`).
    #[inline]
    pub(crate) fn cart_to_frac(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.inv_flat[i * d..(i + 1) * d];
            out[i] = row.iter().zip(x).map(|(a, v)| a * v).sum();
        }
    }

    pub fn reduce_to_fundamental(&self, x: &[f64]) -> Result<Reduced> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, lattice dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("non-finite coordinates".into()));
        }
        let f = self.to_fractional(x);
        let ints: Vec<f64> = f.iter().map(|v| v.floor()).collect();
        let mut frac: Vec<f64> = f.iter().zip(&ints).map(|(v, k)| v - k).collect();
        let mut ints = ints;
        for (fr, k) in frac.iter_mut().zip(ints.iter_mut()) {
            // guard against v - floor(v) rounding up to exactly 1
            if *fr >= 1.0 {
                *fr = 0.0;
                *k += 1.0;
            }
        }
        let floor = self.to_cartesian(&ints);
        Ok(Reduced { point: TorusPoint { frac }, floor, integer_floor: ints })
    }

    /// Euclidean length of the longest vector `A c` with `c` in `{-1/2, 1/2}^d`,
    /// i.e. the circumradius of the centered fundamental cell.
    pub fn cell_radius(&self) -> f64 {
        self.max_corner(|bit| if bit { 0.5 } else { -0.5 })
    }

    /// Largest distance from the origin to a point of the half-open fundamental domain.
    pub fn corner_radius(&self) -> f64 {
        self.max_corner(|bit| if bit { 1.0 } else { 0.0 })
    }

    fn max_corner(&self, coord: impl Fn(bool) -> f64) -> f64 {
        let d = self.dim;
        let mut best: f64 = 0.0;
        let mut c = vec![0.0; d];
        let mut v = vec![0.0; d];
        for mask in 0u32..(1u32 << d) {
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = coord(mask & (1 << i) != 0);
            }
            self.frac_to_cart(&c, &mut v);
            best = best.max(v.iter().map(|t| t * t).sum::<f64>().sqrt());
        }
        best
    }

    /// Integer half-widths of the box that contains every lattice point of norm `<= radius`.
    fn box_half_widths(&self, radius: f64) -> Vec<i64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                let row_norm = self.inv_flat[i * d..(i + 1) * d].iter().map(|t| t * t).sum::<f64>().sqrt();
                (radius * row_norm * (1.0 + 1e-12)).floor() as i64
            })
            .collect()
    }

    /// Streams every lattice vector with `|v| <= radius` to `visit(k, v, |v|^2)`
    /// in lexicographic order of the integer coordinates `k`.
    pub fn for_each_in_ball<F: FnMut(&[i64], &[f64], f64)>(&self, radius: f64, visit: F) {
        let h0 = self.box_half_widths(radius)[0];
        self.scan_slabs(radius, -h0, h0, visit);
    }

    /// Largest `|k_0|` of a lattice vector of norm `<= radius`.
    pub(crate) fn first_half_width(&self, radius: f64) -> i64 {
        self.box_half_widths(radius)[0]
    }

    /// Like [`Lattice::for_each_in_ball`], restricted to first coordinates `k_0` in `lo..=hi`.
    pub(crate) fn scan_slabs<F: FnMut(&[i64], &[f64], f64)>(&self, radius: f64, lo: i64, hi: i64, mut visit: F) {
        let d = self.dim;
        let mut h = self.box_half_widths(radius);
        let lo = lo.max(-h[0]);
        let hi = hi.min(h[0]);
        if lo > hi {
            return;
        }
        let r2 = radius * radius;
        let cols: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| self.gen_flat[i * d + j]).collect()).collect();
        let mut k: Vec<i64> = h.iter().map(|&w| -w).collect();
        k[0] = lo;
        h[0] = hi;
        // partial[l] = sum_{i<l} k_i col_i
        let mut partial = vec![vec![0.0; d]; d + 1];
        for l in 0..d {
            for t in 0..d {
                partial[l + 1][t] = partial[l][t] + k[l] as f64 * cols[l][t];
            }
        }
        loop {
            let v = &partial[d];
            let n2: f64 = v.iter().map(|t| t * t).sum();
            if n2 <= r2 {
                visit(&k, v, n2);
            }
            // odometer increment, last coordinate fastest
            let mut l = d;
            loop {
                if l == 0 {
                    return;
                }
                l -= 1;
                if k[l] < h[l] {
                    k[l] += 1;
                    break;
                }
                if l == 0 {
                    return;
                }
                k[l] = -h[l];
            }
            for m in l..d {
                for t in 0..d {
                    partial[m + 1][t] = partial[m][t] + k[m] as f64 * cols[m][t];
                }
            }
        }
    }

    pub fn enumerate_ball(&self, radius: f64, exclude_origin: bool) -> Result<Vec<LatticeVector>> {
        self.enumerate_ball_capped(radius, exclude_origin, DEFAULT_CAP)
    }

    pub fn enumerate_ball_capped(&self, radius: f64, exclude_origin: bool, cap: usize) -> Result<Vec<LatticeVector>> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::DomainError(format!("radius must be positive, got {radius}")));
        }
        let mut out = Vec::new();
        let mut over = false;
        self.for_each_in_ball(radius, |k, v, n2| {
            if over || (exclude_origin && k.iter().all(|&c| c == 0)) {
                return;
            }
            if out.len() == cap {
                over = true;
                return;
            }
            out.push(LatticeVector { coords: k.to_vec(), cart: v.to_vec(), norm_sq: n2 });
        });
        if over {
            return Err(Error::CapacityExceeded { cap });
        }
        Ok(out)
    }

    fn search_shortest(&self) -> f64 {
        let d = self.dim;
        let min_col = (0..d)
            .map(|j| (0..d).map(|i| self.gen_flat[i * d + j].powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        let mut best = min_col * min_col;
        self.for_each_in_ball(min_col, |k, _, n2| {
            if n2 < best && k.iter().any(|&c| c != 0) {
                best = n2;
            }
        });
        best.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector {
    pub coords: Vec<i64>,
    pub cart: Vec<f64>,
    pub norm_sq: f64,
}

/// Result of reducing a Cartesian point modulo the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduced {
    pub point: TorusPoint,
    /// Cartesian lattice floor `x - A frac`.
    pub floor: Vec<f64>,
    pub integer_floor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint {
    frac: Vec<f64>,
}

impl TorusPoint {
    /// Wraps arbitrary fractional coordinates into `[0,1)^d`.
    pub fn new(frac: &[f64]) -> Self {
        TorusPoint { frac: frac.iter().map(|&f| wrap_unit(f)).collect() }
    }

    pub fn origin(dim: usize) -> Self {
        TorusPoint { frac: vec![0.0; dim] }
    }

    pub fn frac(&self) -> &[f64] {
        &self.frac
    }

    pub fn dim(&self) -> usize {
        self.frac.len()
    }

    /// The point `-x` reduced to the fundamental domain.
    pub fn negated(&self) -> Self {
        TorusPoint::new(&self.frac.iter().map(|f| -f).collect::<Vec<_>>())
    }
}

#[inline]
pub(crate) fn wrap_unit(f: f64) -> f64 {
    let r = f - f.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusConfiguration {
    lattice: Lattice,
    points: Vec<TorusPoint>,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationWire {
    lattice: Lattice,
    frac_points: Vec<Vec<f64>>,
}

impl Serialize for TorusConfiguration {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigurationWire {
            lattice: self.lattice.clone(),
            frac_points: self.points.iter().map(|p| p.frac.clone()).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for TorusConfiguration {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let w = ConfigurationWire::deserialize(de)?;
        let pts = w.frac_points.iter().map(|p| TorusPoint::new(p)).collect();
        TorusConfiguration::new(w.lattice, pts).map_err(serde::de::Error::custom)
    }
}

impl TorusConfiguration {
    pub fn new(lattice: Lattice, points: Vec<TorusPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DomainError("a configuration needs at least one point".into()));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != lattice.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} on a {}-dimensional lattice",
                p.dim(),
                lattice.dim()
            )));
        }
        Ok(TorusConfiguration { lattice, points })
    }

    /// Builds a configuration from a flat `n * d` array of fractional coordinates.
    pub fn from_flat(lattice: Lattice, flat: &[f64]) -> Result<Self> {
        let d = lattice.dim();
        if flat.len() % d != 0 {
            return Err(Error::DimensionMismatch("flat coordinate array not a multiple of d".into()));
        }
        let pts = flat.chunks(d).map(TorusPoint::new).collect();
        Self::new(lattice, pts)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.frac.iter().copied()).collect()
    }

    /// Same fractional coordinates on another lattice of equal dimension.
    pub fn with_lattice(&self, lattice: Lattice) -> Result<Self> {
        Self::new(lattice, self.points.clone())
    }

    /// Translates every point by a Cartesian vector.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        let f = self.lattice.to_fractional(shift);
        let pts = self
            .points
            .iter()
            .map(|p| TorusPoint::new(&p.frac.iter().zip(&f).map(|(a, b)| a + b).collect::<Vec<_>>()))
            .collect();
        Self::new(self.lattice.clone(), pts)
    }

    /// The configuration `{(x_j + k)/m : k in {0..m-1}^d}` on the same lattice,
    /// i.e. `S(w)` for the sublattice `m Lambda` rescaled by `1/m`.
    pub fn refined(&self, m: usize) -> Result<Self> {
        let d = self.lattice.dim();
        let total = checked_power(m, d)?;
        let mut pts = Vec::with_capacity(total * self.len());
        for p in &self.points {
            for idx in 0..total {
                let mut rem = idx;
                let mut frac = vec![0.0; d];
                for i in (0..d).rev() {
                    let k = rem % m;
                    rem /= m;
                    frac[i] = (p.frac[i] + k as f64) / m as f64;
                }
                pts.push(TorusPoint::new(&frac));
            }
        }
        Self::new(self.lattice.clone(), pts)
    }

    /// Replicates the configuration into a sublattice: the points `x_j + r`
    /// for `r` in `Lambda ∩ Omega_{sub}`, expressed on `sub`.
    pub fn replicated_into(&self, sub: &Lattice) -> Result<Self> {
        let d = self.lattice.dim();
        if sub.dim() != d {
            return Err(Error::DimensionMismatch("sublattice dimension differs".into()));
        }
        // B = A^{-1} A' must be an integer matrix
        let b = self.lattice.generator().clone().try_inverse().ok_or(Error::SingularMatrix)? * sub.generator();
        let mut bi = DMatrix::<f64>::zeros(d, d);
        for (x, y) in b.iter().zip(bi.iter_mut()) {
            let r = x.round();
            if (x - r).abs() > 1e-9 {
                return Err(Error::DomainError("target is not a sublattice".into()));
            }
            *y = r;
        }
        let b_inv = bi.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let lo: Vec<i64> = (0..d).map(|i| (0..d).map(|j| bi[(i, j)].min(0.0)).sum::<f64>() as i64).collect();
        let hi: Vec<i64> = (0..d).map(|i| (0..d).map(|j| bi[(i, j)].max(0.0)).sum::<f64>() as i64).collect();
        let mut reps: Vec<Vec<f64>> = Vec::new();
        let mut k = lo.clone();
        loop {
            let kf: Vec<f64> = k.iter().map(|&c| c as f64).collect();
            let t: Vec<f64> = (0..d).map(|i| (0..d).map(|j| b_inv[(i, j)] * kf[j]).sum()).collect();
            if t.iter().all(|&v| v > -1e-9 && v < 1.0 - 1e-9) {
                reps.push(kf);
            }
            let mut l = d;
            let mut done = true;
            while l > 0 {
                l -= 1;
                if k[l] < hi[l] {
                    k[l] += 1;
                    done = false;
                    break;
                }
                k[l] = lo[l];
            }
            if done {
                break;
            }
        }
        let mut pts = Vec::with_capacity(reps.len() * self.len());
        for p in &self.points {
            for r in &reps {
                let g: Vec<f64> = p.frac.iter().zip(r).map(|(a, b)| a + b).collect();
                let t: Vec<f64> = (0..d).map(|i| (0..d).map(|j| b_inv[(i, j)] * g[j]).sum()).collect();
                pts.push(TorusPoint::new(&t));
            }
        }
        Self::new(sub.clone(), pts)
    }
}

fn checked_power(m: usize, d: usize) -> Result<usize> {
    let mut total: usize = 1;
    for _ in 0..d {
        total =
            total.checked_mul(m).filter(|&t| t <= DEFAULT_CAP).ok_or(Error::CapacityExceeded { cap: DEFAULT_CAP })?;
    }
    Ok(total)
}

/// The scaled lattice configuration `(1/m) Lambda ∩ Omega`.
pub fn lattice_configuration(lattice: &Lattice, m: usize) -> Result<TorusConfiguration> {
    if m == 0 {
        return Err(Error::DomainError("m must be at least 1".into()));
    }
    let origin = TorusConfiguration::new(lattice.clone(), vec![TorusPoint::origin(lattice.dim())])?;
    origin.refined(m)
}

pub fn random_configuration(lattice: &Lattice, n: usize, seed: u64) -> Result<TorusConfiguration> {
    random_configuration_stream(lattice, n, seed, 0)
}

/// Like [`random_configuration`] but drawing from an independent ChaCha stream.
pub fn random_configuration_stream(lattice: &Lattice, n: usize, seed: u64, stream: u64) -> Result<TorusConfiguration> {
    if n == 0 {
        return Err(Error::DomainError("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let d = lattice.dim();
    let pts = (0..n)
        .map(|_| {
            let f: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            TorusPoint::new(&f)
        })
        .collect();
    TorusConfiguration::new(lattice.clone(), pts)
}

/// Integer `m` with `m^d == n`, if any.
pub fn perfect_root(n: usize, d: usize) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&m| m > 0 && m.checked_pow(d as u32) == Some(n))
}
