//! Periodic Riesz and logarithmic energies on flat tori `R^d / Lambda`.
//!
//! Lattice sums are evaluated with an Ewald split of the Mellin integral at
//! `t = 1`; every value carries a rigorous truncation bound. On top of the
//! evaluators sit multi-start energy minimization, next-order constant fits
//! and the renormalized shell-sum experiment.

pub mod asymptotics;
pub mod control;
pub mod energy;
pub mod error;
pub mod exponent;
pub mod lattice;
pub mod optimizer;
pub mod shell;
pub mod special;
pub mod zeta;

pub use asymptotics::{
    build_g_sequence, check_upper_bound, fit_next_order_constant, fit_report, lattice_independence_probe,
    lattice_upper_bound, AsymptoticFit, BoundCheck, FitReport, IndependenceReport,
};
pub use control::SummationControl;
pub use energy::{
    classical_energy, classical_shift, energy_gradient, leading_coefficient, periodic_energy, EnergyEvaluator,
    EnergyGradient, EnergyValue,
};
pub use error::{Error, Result};
pub use exponent::RieszExponent;
pub use lattice::{
    lattice_configuration, random_configuration, random_configuration_stream, Lattice, LatticeVector, Reduced,
    TorusConfiguration, TorusPoint,
};
pub use optimizer::{minimize_energy, minimize_from, monotonicity_probe, DescentBudget, MinimizationResult};
pub use shell::{
    renormalized_ratio, shell_sum_dl, shell_sweep, sphere_moment, sphere_moments, Normalization, ShellSweep,
};
pub use special::{exponential_integral_e1, theta_direct, theta_dual, upper_incomplete_gamma, ThetaSumResult};
pub use zeta::{
    epstein_hurwitz, epstein_zeta, gaussian_regularized_potential, mean_value_check, midpoint_mean, periodic_potential,
    zeta_prime_at_zero, zeta_prime_finite_difference, EwaldEvaluator, PotentialValue,
};
