//! Observables on sample batches: bump test functions, counts, centered
//! linear statistics, local-law and rigidity reports, loop-equation
//! residuals and the `K_V` operator identity.

mod kv;
mod local;
mod loops;

pub use kv::{default_stencil, elff_identity, kv_identity_check, KvReport};
pub use local::{local_law_report, rigidity_scan, BumpFamily, FluctuationReport, FluctuationRow, LocalLawFrame, LocalLawReport};
pub use loops::{build_h, loop_residual, ConstantH, IdentityH, LoopFunction, LoopReport, LoopTerms, ReflectedH, TestH};

use thiserror::Error;

use crate::bump::{BumpProfile, TestFunction};
use crate::equilibrium::{EquilibriumError, EquilibriumMeasure};
use crate::kernel::{Disk, PlanePoint};
use crate::potential::PotentialError;
use crate::sampler::Configuration;
use crate::stats::{self, Estimate};

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("scale exponent s = {0} outside [0, 1/2)")]
    ScaleOutOfRange(f64),
    #[error("ΔV = {value} ≤ 0 at {at:?} inside the bump support")]
    DegenerateLaplacian { at: PlanePoint, value: f64 },
    #[error("stencil point {0:?} lies outside the equilibrium support")]
    StencilOutsideSupport(PlanePoint),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

/// Bump at mesoscopic scale `t = N^{−s}`, supported in `B(z₀, t/2)`.
pub fn make_bump(
    z0: PlanePoint,
    s: f64,
    n: usize,
    profile: BumpProfile,
    amplitude: f64,
) -> Result<TestFunction, ObservableError> {
    if !(0.0..0.5).contains(&s) {
        return Err(ObservableError::ScaleOutOfRange(s));
    }
    if n == 0 {
        return Err(ObservableError::Argument("N must be at least 1".into()));
    }
    Ok(TestFunction::new(z0, (n as f64).powf(-s), profile, amplitude))
}

/// Number of points in the closed disk `B(z₀, r)`.
pub fn count_in_disk(c: &Configuration, z0: PlanePoint, r: f64) -> usize {
    debug_assert!(r > 0.0);
    let d = Disk::new(z0, r);
    c.points.iter().filter(|z| d.contains(**z)).count()
}

/// `μ_V(B(z₀, r))`.
pub fn equilibrium_mass_in_disk(eq: &dyn EquilibriumMeasure, z0: PlanePoint, r: f64) -> f64 {
    eq.mass_in_disk(Disk::new(z0, r))
}

/// `∫ f dμ_V` over the bump's support disk.
pub fn bump_integral(f: &TestFunction, eq: &dyn EquilibriumMeasure) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    eq.integrate(&|z| f.value(z), Disk::new(f.center(), f.support_radius()))
}

/// `X_f = Σ f(z_j) − N ∫ f dμ_V`.
pub fn linear_statistic(c: &Configuration, f: &TestFunction, eq: &dyn EquilibriumMeasure) -> f64 {
    centered_sum(c, f, bump_integral(f, eq))
}

/// `X_f` with a precomputed centering integral.
pub fn centered_sum(c: &Configuration, f: &TestFunction, integral: f64) -> f64 {
    c.points.iter().map(|z| f.value(*z)).sum::<f64>() - c.len() as f64 * integral
}

/// Mean of a chain-ordered series: batch means over 20 blocks when long
/// enough, otherwise the naive i.i.d. error.
pub(crate) fn chain_estimate(xs: &[f64]) -> Estimate {
    if xs.len() >= 40 {
        stats::batch_means(xs, 20)
    } else {
        stats::iid_estimate(xs)
    }
}
