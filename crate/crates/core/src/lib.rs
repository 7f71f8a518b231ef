//! Two-dimensional one-component plasma at arbitrary inverse temperature.
//!
//! The crate is organized bottom-up:
//!
//! - [`kernel`]: the logarithmic kernel, its disk-smoothed variant and plane
//!   geometry helpers.
//! - [`potential`]: confining potentials as closed compositional values.
//! - [`equilibrium`]: equilibrium measures by radial closed form and by a
//!   grid obstacle-problem solver, energies and perturbation identities.
//! - [`sampler`]: Metropolis chains for the Gibbs measure, the exact β = 1
//!   radial oracle and an i.i.d. null model.
//! - [`observables`]: test functions, counts, linear statistics, local-law
//!   and rigidity reports, and loop-equation residuals.
//! - [`io`]: on-disk formats for sample batches and equilibrium grids.

pub mod bump;
pub mod equilibrium;
pub mod io;
pub mod kernel;
pub mod observables;
pub mod potential;
mod quad;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use kernel::{Complex, Disk, PlanePoint};
