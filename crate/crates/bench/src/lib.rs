//! Shared fixtures for the benchmarks.

use riesz_core::{random_configuration, Lattice, TorusConfiguration};

/// Random `n`-point configuration on the hexagonal torus with a fixed seed.
pub fn hex_configuration(n: usize) -> TorusConfiguration {
    random_configuration(&Lattice::hexagonal(), n, 0xbe7c).expect("valid size")
}

/// A generic off-lattice point for `Z^d` in Cartesian coordinates.
pub fn shell_point(d: usize) -> Vec<f64> {
    (0..d).map(|i| 0.1 + 0.07 * i as f64).collect()
}
