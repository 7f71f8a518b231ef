//! Monte Carlo sampling of the Gibbs measure `∝ e^{−βH_N}` with
//! `H_N = Σ_{j≠k} log 1/|z_j − z_k| + N Σ_j V(z_j)`, plus the exact β = 1
//! radial oracle, an i.i.d. null model and the conditional potential of a
//! disk given the particles outside it.

mod chain;
mod conditional;
mod energy;
mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::EquilibriumError;
use crate::kernel::PlanePoint;
use crate::potential::{check_growth, Potential, PotentialError, Region};

pub use chain::{accept, run_chain, run_chain_streaming, Algorithm, ChainConfig, ChainSummary, Init, SampleBatch};
pub use conditional::{conditional_potential, energy_decomposition_check, split_by_disk};
pub use energy::{energy_delta_move, grad_energy, site_gradient, total_energy};
pub use oracle::{ginibre_radii_sample, iid_null_sample, kostlan_count_moments, kostlan_count_pmf};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("particles {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("initial configuration has non-finite energy")]
    InfiniteInitialEnergy,
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    /// A streaming sink refused a frame.
    #[error("frame sink: {0}")]
    Sink(String),
}

/// Particle number, inverse temperature and confining potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GasParams {
    pub n: usize,
    pub beta: f64,
    pub potential: Potential,
}

impl GasParams {
    pub fn new(n: usize, beta: f64, potential: Potential) -> Result<Self, SamplerError> {
        if n == 0 {
            return Err(SamplerError::Argument("need at least one particle".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(SamplerError::Argument(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { n, beta, potential })
    }

    /// Growth-condition advisory: `None` when the potential is walled or
    /// `V − (1+ε) log|z|²` increases over the sampled radii.
    pub fn growth_advisory(&self) -> Option<String> {
        if !matches!(self.potential.finite_region(), Region::Plane) {
            return None;
        }
        match check_growth(&self.potential, &[2.0, 4.0, 8.0, 16.0, 32.0]) {
            Ok(r) if r.increasing => None,
            Ok(_) => Some("growth condition not confirmed on sampled radii".into()),
            Err(e) => Some(format!("growth check failed: {e}")),
        }
    }
}

/// An ordered list of particle positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<PlanePoint>,
}

impl Configuration {
    pub fn new(points: Vec<PlanePoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Check the configuration invariants against a potential.
    pub fn validate(&self, p: &Potential) -> Result<(), SamplerError> {
        let region = p.finite_region();
        for (i, z) in self.points.iter().enumerate() {
            if !z.is_finite() || !region.contains(*z) {
                return Err(SamplerError::Argument(format!("point {i} at {z:?} lies where V = +∞")));
            }
        }
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                if self.points[i] == self.points[j] {
                    return Err(SamplerError::Coincident(i, j));
                }
            }
        }
        Ok(())
    }

    /// Mirror image under `z ↦ z̄`.
    pub fn conjugate(&self) -> Self {
        Self { points: self.points.iter().map(|z| PlanePoint::new(z.x, -z.y)).collect() }
    }
}
