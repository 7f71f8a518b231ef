//! Equilibrium measures `μ_V` of the weighted logarithmic energy.
//!
//! Two independent routes are provided: a closed form for radial
//! potentials ([`solve_equilibrium_radial`]) and a grid obstacle-problem
//! solver ([`solve_obstacle`]) that works for any potential in
//! [`crate::potential`]. On top of the grid route sit logarithmic
//! potentials, the energy functional, Euler–Lagrange residuals and the
//! closed-form perturbation and restriction identities.

mod grid;
mod identities;
mod logpot;
mod obstacle;
mod radial;

use rand::RngCore;
use thiserror::Error;

use crate::kernel::{Disk, PlanePoint};
use crate::potential::PotentialError;

pub use grid::{GridField, GridMeasure, GridSpec};
pub use identities::{
    dirichlet_energy_two_ways, euler_lagrange_residual, perturb_equilibrium,
    perturbation_energy_identity, restriction_potential, ElResidual,
};
pub use logpot::{energy_functional, log_potential_direct, log_potential_of_measure, pairing};
pub use obstacle::{solve_obstacle, EquilibriumResult, ObstacleOptions, SolverDiagnostics};
pub use radial::{solve_equilibrium_radial, RadialEquilibrium};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("potential is not radial; the closed-form route needs a radial polynomial")]
    NotRadial,
    #[error("normalization R V'(R)/2 = 1 not reached for R ≤ {0}")]
    NormalizationUnreachable(f64),
    #[error("obstacle solver did not converge after {iterations} sweeps (update {residual:e}, mass {mass})")]
    NonConvergence { iterations: usize, residual: f64, mass: f64 },
    #[error("support touches the grid boundary ring; enlarge the box")]
    BoxTooSmall,
    #[error("measure has mass {0}, expected 1")]
    NotNormalized(f64),
    #[error("measure charges cells where the potential is infinite ({0} cells)")]
    InfiniteEnergy(usize),
    #[error("precondition violated: {reason}; offending cells {cells:?}{more}", more = if *.total > .cells.len() { format!(" (+{} more)", .total - .cells.len()) } else { String::new() })]
    Precondition { reason: String, cells: Vec<(usize, usize)>, total: usize },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Common interface of the radial and grid equilibrium measures, used by
/// observables and by the i.i.d. null model.
pub trait EquilibriumMeasure: Sync {
    /// Density of `μ_V` with respect to Lebesgue measure.
    fn density_at(&self, z: PlanePoint) -> f64;

    /// `μ_V(B)` for a closed disk.
    fn mass_in_disk(&self, disk: Disk) -> f64;

    /// `∫ g dμ_V` where `g` vanishes outside `support`.
    fn integrate(&self, g: &dyn Fn(PlanePoint) -> f64, support: Disk) -> f64;

    /// One draw from `μ_V`.
    fn sample(&self, rng: &mut dyn RngCore) -> PlanePoint;

    /// Whether the disk lies in the interior of the support.
    fn contains_disk(&self, disk: Disk) -> bool;
}
