use std::f64::consts::{PI, TAU};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{EquilibriumError, EquilibriumMeasure, GridMeasure, GridSpec};
use crate::kernel::{Disk, PlanePoint};
use crate::potential::{Potential, RadialProfile};
use crate::quad;

/// Equilibrium measure of a radial potential `V(r) = Σ c_k r^{2k}`.
///
/// With disk support of radius `R`, the mass inside radius `r ≤ R` is
/// `r V'(r)/2` and the density is `ΔV/4π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialEquilibrium {
    coefficients: Vec<f64>,
    support_radius: f64,
    f_const: f64,
}

/// Closed-form equilibrium for radial potentials.
pub fn solve_equilibrium_radial(p: &Potential) -> Result<RadialEquilibrium, EquilibriumError> {
    let prof = p.as_radial().ok_or(EquilibriumError::NotRadial)?;
    if prof.coefficients().iter().any(|&c| c < 0.0 || !c.is_finite())
        || prof.coefficients().iter().all(|&c| c == 0.0)
    {
        return Err(EquilibriumError::Argument(
            "radial route needs nonnegative, not all zero coefficients".into(),
        ));
    }
    let mass = |r: f64| 0.5 * r * prof.derivative(r);
    let cap = 1e6;
    let mut hi = 1.0;
    while mass(hi) < 1.0 {
        hi *= 2.0;
        if hi > cap {
            return Err(EquilibriumError::NormalizationUnreachable(cap));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut eq = RadialEquilibrium {
        coefficients: prof.coefficients().to_vec(),
        support_radius: r,
        f_const: 0.0,
    };
    // F = U^μ(0) + V(0)/2, and V(0) = 0 for this family
    eq.f_const = eq.log_potential(0.0);
    Ok(eq)
}

impl RadialEquilibrium {
    fn profile(&self) -> RadialProfile {
        crate::potential::make_radial(&self.coefficients)
            .ok()
            .and_then(|p| p.as_radial())
            .expect("coefficients validated at construction")
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// The Robin-type constant `F_V`.
    pub fn f_constant(&self) -> f64 {
        self.f_const
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Density as a function of the radius.
    pub fn radial_density(&self, r: f64) -> f64 {
        if r <= self.support_radius {
            self.profile().laplacian(r) / (4.0 * PI)
        } else {
            0.0
        }
    }

    /// `μ_V(B(0, r))`.
    pub fn cdf(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.support_radius);
        (0.5 * r * self.profile().derivative(r)).min(1.0)
    }

    /// `U^μ` at radius `r`: shells inside contribute `log 1/r`, shells
    /// outside contribute `log 1/s`. The shell density `½ΔV(s)s` is a
    /// polynomial, so the outer integral is done term by term.
    pub fn log_potential(&self, r: f64) -> f64 {
        let rr = self.support_radius;
        let inner = if r > 0.0 { -r.ln() * self.cdf(r) } else { 0.0 };
        // ∫ s^{2k−1} log(1/s) ds = s^{2k}/(2k) · (1/(2k) − log s)
        let anti = |s: f64, k: f64| {
            if s <= 0.0 {
                0.0
            } else {
                crate::bump::ipow(s, 2 * k as u32) / (2.0 * k) * (1.0 / (2.0 * k) - s.ln())
            }
        };
        let lo = r.min(rr);
        let outer: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = (i + 1) as f64;
                2.0 * k * k * c * (anti(rr, k) - anti(lo, k))
            })
            .sum();
        inner + outer
    }

    /// `(V, μ_V)`.
    pub fn potential_pairing(&self) -> f64 {
        let rr = self.support_radius;
        let mut acc = 0.0;
        for (i, &ci) in self.coefficients.iter().enumerate() {
            for (j, &cj) in self.coefficients.iter().enumerate() {
                let (a, k) = ((i + 1) as u32, (j + 1) as f64);
                let m = 2 * a + 2 * k as u32;
                acc += ci * cj * 2.0 * k * k * crate::bump::ipow(rr, m) / m as f64;
            }
        }
        acc
    }

    /// `I_V(μ_V) = F + ½(V, μ_V)`.
    pub fn energy(&self) -> f64 {
        self.f_const + 0.5 * self.potential_pairing()
    }

    /// Radius `r` with `μ_V(B(0, r)) = q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let (mut lo, mut hi) = (0.0, self.support_radius);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Cell averages of the density on a grid.
    pub fn to_grid_measure(&self, grid: GridSpec) -> Result<GridMeasure, EquilibriumError> {
        GridMeasure::from_density_fn(grid, 8, |z| self.density_at(z))
    }

    /// Angular extent `θ(r)` of the circle of radius `r` about the origin
    /// that lies in the disk: the arc is `[φ_c − θ, φ_c + θ]`.
    fn half_arc(r: f64, d: f64, rho: f64) -> f64 {
        if r + d <= rho {
            PI
        } else if r >= d + rho || r <= d - rho {
            0.0
        } else {
            ((r * r + d * d - rho * rho) / (2.0 * r * d)).clamp(-1.0, 1.0).acos()
        }
    }
}

impl EquilibriumMeasure for RadialEquilibrium {
    fn density_at(&self, z: PlanePoint) -> f64 {
        self.radial_density(z.norm())
    }

    fn mass_in_disk(&self, disk: Disk) -> f64 {
        let d = disk.center.norm();
        let rho = disk.radius;
        let rr = self.support_radius;
        if d == 0.0 {
            return self.cdf(rho);
        }
        let prof = self.profile();
        let lo = (d - rho).max(0.0);
        let hi = (d + rho).min(rr);
        let mut breaks = vec![(d - rho).abs()];
        breaks.retain(|&b| b > lo && b < hi);
        breaks.insert(0, lo);
        breaks.push(hi);
        let f = |r: f64| 2.0 * Self::half_arc(r, d, rho) * r * prof.laplacian(r) / (4.0 * PI);
        breaks
            .windows(2)
            .map(|w| quad::integrate_cosine_map(f, w[0], w[1], 4))
            .sum()
    }

    fn integrate(&self, g: &dyn Fn(PlanePoint) -> f64, support: Disk) -> f64 {
        let rr = self.support_radius;
        let c = support.center;
        let d = c.norm();
        let rho = support.radius;
        if d + rho <= rr {
            // disk sits in the smooth part: polar coordinates about its center
            let m = 128;
            return quad::integrate(
                |s| {
                    let mut acc = 0.0;
                    for k in 0..m {
                        let phi = TAU * k as f64 / m as f64;
                        let z = PlanePoint::new(c.x + s * phi.cos(), c.y + s * phi.sin());
                        acc += g(z) * self.density_at(z);
                    }
                    acc * TAU / m as f64 * s
                },
                0.0,
                rho,
                8,
            );
        }
        // general case: polar about the origin, restricted to the arc window
        let lo = (d - rho).max(0.0);
        let hi = (d + rho).min(rr);
        let phi_c = c.y.atan2(c.x);
        let prof = self.profile();
        quad::integrate(
            |r| {
                let th = Self::half_arc(r, d, rho);
                if th <= 0.0 {
                    return 0.0;
                }
                let dens = prof.laplacian(r) / (4.0 * PI);
                quad::integrate(
                    |phi| g(PlanePoint::new(r * phi.cos(), r * phi.sin())),
                    phi_c - th,
                    phi_c + th,
                    4,
                ) * dens
                    * r
            },
            lo,
            hi,
            8,
        )
    }

    fn sample(&self, rng: &mut dyn RngCore) -> PlanePoint {
        let u: f64 = rng.random();
        let phi: f64 = TAU * rng.random::<f64>();
        let r = self.quantile(u);
        PlanePoint::new(r * phi.cos(), r * phi.sin())
    }

    fn contains_disk(&self, disk: Disk) -> bool {
        disk.center.norm() + disk.radius < self.support_radius
    }
}
