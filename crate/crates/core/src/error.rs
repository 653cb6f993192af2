use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("generator matrix is singular")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("enumeration would exceed the cap of {cap} vectors")]
    CapacityExceeded { cap: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("pole at s = d = {0}")]
    PoleAtD(usize),
    #[error("point lies on the lattice")]
    PointOnLattice,
    #[error("tail bound {bound:e} exceeds tolerance {tol:e} within {max_terms} terms")]
    ToleranceNotMet { bound: f64, tol: f64, max_terms: usize },
    #[error("points {0} and {1} coincide on the torus")]
    CoincidentPoints(usize, usize),
    #[error("ill-conditioned fit (condition number {0:e})")]
    IllConditionedFit(f64),
    #[error("lattice co-volume {0} is not 1")]
    CovolumeNotOne(f64),
    #[error("no lattice points in the shell")]
    EmptyShell,
}

pub type Result<T> = std::result::Result<T, Error>;
