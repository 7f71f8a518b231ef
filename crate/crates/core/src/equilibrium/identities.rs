use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::logpot::{energy_functional, log_potential_of_measure};
use super::{EquilibriumError, EquilibriumResult, GridMeasure};
use crate::bump::TestFunction;
use crate::kernel::{Disk, PlanePoint};
use crate::potential::{
    add_external_charges, restrict_hard_wall, scale_potential, subtract_bump, DiscreteCharge, Potential,
};
use crate::quad;

/// Euler–Lagrange report for `U^μ + V/2 − F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElResidual {
    /// `max |U^μ + V/2 − F|` over support cells.
    pub on_support_max: f64,
    /// `min (U^μ + V/2 − F)` over finite-potential cells off the support.
    pub off_support_min: f64,
    pub f_constant: f64,
}

pub fn euler_lagrange_residual(eq: &EquilibriumResult, p: &Potential) -> ElResidual {
    let g = eq.grid();
    let u = log_potential_of_measure(&eq.measure, g);
    let mut on: f64 = 0.0;
    let mut off = f64::INFINITY;
    for k in 0..g.len() {
        let v = p.value(g.point(k));
        if !v.is_finite() {
            continue;
        }
        let r = u.values[k] + 0.5 * v - eq.f_constant;
        if eq.support_mask[k] {
            on = on.max(r.abs());
        } else {
            off = off.min(r);
        }
    }
    ElResidual { on_support_max: on, off_support_min: off, f_constant: eq.f_constant }
}

/// Exact cell integrals `∫_cell Δf` by the divergence theorem, so that the
/// total over any grid telescopes to zero.
fn cell_laplacian_integrals(grid: super::GridSpec, f: &TestFunction) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h();
    let reach = f.support_radius() + h;
    let x0 = grid.center.x - grid.half_width;
    let y0 = grid.center.y - grid.half_width;
    let (nodes, weights) = quad::gauss_legendre(8);
    let edge_flux = |a: PlanePoint, vertical: bool| -> f64 {
        // flux of ∇f through the edge starting at `a` with unit normal +x (vertical) or +y
        let mid = if vertical {
            PlanePoint::new(a.x, a.y + 0.5 * h)
        } else {
            PlanePoint::new(a.x + 0.5 * h, a.y)
        };
        if mid.dist(f.center()) > f.support_radius() + h {
            return 0.0;
        }
        let mut s = 0.0;
        for (t, w) in nodes.iter().zip(&weights) {
            let off = 0.5 * h * (1.0 + t);
            let z = if vertical { PlanePoint::new(a.x, a.y + off) } else { PlanePoint::new(a.x + off, a.y) };
            let gr = f.gradient(z);
            s += w * if vertical { gr[0] } else { gr[1] };
        }
        0.5 * h * s
    };
    let mut out = vec![0.0; grid.len()];
    for j in 0..n {
        for i in 0..n {
            let c = grid.cell_center(i, j);
            if c.dist(f.center()) > reach {
                continue;
            }
            let xl = x0 + i as f64 * h;
            let yb = y0 + j as f64 * h;
            let right = edge_flux(PlanePoint::new(xl + h, yb), true);
            let left = edge_flux(PlanePoint::new(xl, yb), true);
            let top = edge_flux(PlanePoint::new(xl, yb + h), false);
            let bottom = edge_flux(PlanePoint::new(xl, yb), false);
            out[grid.index(i, j)] = right - left + top - bottom;
        }
    }
    out
}

/// `μ_{V−f} = μ_V − Δf/4π` on the equilibrium grid.
///
/// Requires the bump's support to sit inside the coincidence set and
/// `Δf ≤ ΔV` there (equivalently, the new density stays nonnegative).
pub fn perturb_equilibrium(eq: &EquilibriumResult, f: &TestFunction) -> Result<GridMeasure, EquilibriumError> {
    let g = eq.grid();
    if f.is_zero() {
        return Ok(eq.measure.clone());
    }
    let h2 = g.h() * g.h();
    let lap = cell_laplacian_integrals(g, f);
    let outside: Vec<(usize, usize)> = (0..g.len())
        .filter(|&k| lap[k] != 0.0 && !eq.support_mask[k])
        .map(|k| g.coords(k))
        .collect();
    if !outside.is_empty() {
        let total = outside.len();
        return Err(EquilibriumError::Precondition {
            reason: "bump support leaves the equilibrium support".into(),
            cells: outside.into_iter().take(8).collect(),
            total,
        });
    }
    let dens = eq.measure.density();
    let new: Vec<f64> = (0..g.len()).map(|k| dens[k] - lap[k] / h2 / (4.0 * PI)).collect();
    let bad: Vec<(usize, usize)> = (0..g.len())
        .filter(|&k| new[k] < -1e-12 * dens[k].abs().max(1.0))
        .map(|k| g.coords(k))
        .collect();
    if !bad.is_empty() {
        let total = bad.len();
        return Err(EquilibriumError::Precondition {
            reason: "Δf exceeds ΔV".into(),
            cells: bad.into_iter().take(8).collect(),
            total,
        });
    }
    GridMeasure::new(g, new.into_iter().map(|d| d.max(0.0)).collect())
}

/// `(f, −Δf)` two ways: directly, and as `‖∇f‖₂²`, both by polar
/// quadrature about the bump center.
pub fn dirichlet_energy_two_ways(f: &TestFunction) -> (f64, f64) {
    let c = f.center();
    let rho = f.support_radius();
    let m = 16;
    let ring = |r: f64, g: &dyn Fn(PlanePoint) -> f64| -> f64 {
        (0..m)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / m as f64;
                g(PlanePoint::new(c.x + r * phi.cos(), c.y + r * phi.sin()))
            })
            .sum::<f64>()
            * 2.0
            * PI
            / m as f64
            * r
    };
    let direct = quad::integrate(|r| ring(r, &|z| -f.value(z) * f.laplacian(z)), 0.0, rho, 4);
    let grad = quad::integrate(
        |r| {
            ring(r, &|z| {
                let g = f.gradient(z);
                g[0] * g[0] + g[1] * g[1]
            })
        },
        0.0,
        rho,
        4,
    );
    (direct, grad)
}

/// Both sides of
/// `I_{V−f}(μ_{V−f}) = I_V(μ_V) − (f, μ_V) − (f, −Δf)/8π`.
pub fn perturbation_energy_identity(
    eq: &EquilibriumResult,
    p: &Potential,
    f: &TestFunction,
) -> Result<(f64, f64), EquilibriumError> {
    let perturbed = perturb_equilibrium(eq, f)?;
    let norm = |m: &GridMeasure| GridMeasure::new(m.grid, m.density().iter().map(|d| d / m.mass()).collect());
    let mu = norm(&eq.measure)?;
    let nu = norm(&perturbed)?;
    let lhs = energy_functional(&nu, &subtract_bump(p.clone(), f.clone()))?;
    let iv = energy_functional(&mu, p)?;
    let f_mu = mu.integrate(|z| f.value(z));
    let (_, dirichlet) = dirichlet_energy_two_ways(f);
    Ok((lhs, iv - f_mu - dirichlet / (8.0 * PI)))
}

/// Potential whose equilibrium measure is `μ_V|_B / μ_V(B)`:
/// `W = (V + 2∫_{S∖B} log 1/|z − w| dμ_V(w)) / μ_V(B)` on `B`, `+∞` outside.
///
/// The outer part of `μ_V` enters as point charges at cell centers (or at
/// the centroid of the outer part for cells the circle crosses).
pub fn restriction_potential(eq: &EquilibriumResult, p: &Potential, b: Disk) -> Result<Potential, EquilibriumError> {
    let g = eq.grid();
    let escaping: Vec<(usize, usize)> = eq
        .cells_in_disk(b)
        .filter(|&k| !eq.support_mask[k])
        .map(|k| g.coords(k))
        .collect();
    if !escaping.is_empty() {
        let total = escaping.len();
        return Err(EquilibriumError::Precondition {
            reason: "disk is not inside the equilibrium support".into(),
            cells: escaping.into_iter().take(8).collect(),
            total,
        });
    }
    let mass_b = eq.measure.mass_in_disk(b) / eq.measure.mass();
    if !(mass_b > 0.0) {
        return Err(EquilibriumError::Argument("μ_V(B) vanishes".into()));
    }
    let h = g.h();
    let sub = 8;
    let mut charges = Vec::new();
    for (k, &d) in eq.measure.density().iter().enumerate() {
        if d <= 0.0 {
            continue;
        }
        let (i, j) = g.coords(k);
        let frac = g.disk_fraction(i, j, b);
        if frac >= 1.0 {
            continue;
        }
        let c = g.point(k);
        let loc = if frac == 0.0 {
            c
        } else {
            let (mut sx, mut sy, mut cnt) = (0.0, 0.0, 0usize);
            for a in 0..sub {
                for bb in 0..sub {
                    let q = PlanePoint::new(
                        c.x + h * ((a as f64 + 0.5) / sub as f64 - 0.5),
                        c.y + h * ((bb as f64 + 0.5) / sub as f64 - 0.5),
                    );
                    if !b.contains(q) {
                        sx += q.x;
                        sy += q.y;
                        cnt += 1;
                    }
                }
            }
            PlanePoint::new(sx / cnt as f64, sy / cnt as f64)
        };
        let w = d * h * h * (1.0 - frac) / eq.measure.mass();
        charges.push(DiscreteCharge::new(loc, w));
    }
    let inv = 1.0 / mass_b;
    let scaled = scale_potential(p.clone(), inv)?;
    let charged = add_external_charges(scaled, &charges, inv)?;
    Ok(restrict_hard_wall(charged, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::BumpProfile;
    use crate::equilibrium::{solve_obstacle, GridSpec, ObstacleOptions};
    use crate::potential::make_quadratic;

    fn quadratic(n: usize) -> EquilibriumResult {
        solve_obstacle(&make_quadratic(), GridSpec::square(2.0, n).unwrap(), &ObstacleOptions::default()).unwrap()
    }

    #[test]
    fn cell_laplacians_telescope() {
        let g = GridSpec::square(2.0, 64).unwrap();
        let f = TestFunction::new(PlanePoint::new(0.13, -0.2), 0.5, BumpProfile::Quartic, 0.3);
        let lap = cell_laplacian_integrals(g, &f);
        let total: f64 = lap.iter().sum();
        assert!(total.abs() < 1e-14, "{total}");
        // and each cell integral matches a fine midpoint rule
        let h = g.h();
        let k = g.index(34, 29);
        let c = g.point(k);
        let m = 200;
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                let z = PlanePoint::new(
                    c.x + h * ((a as f64 + 0.5) / m as f64 - 0.5),
                    c.y + h * ((b as f64 + 0.5) / m as f64 - 0.5),
                );
                s += f.laplacian(z);
            }
        }
        s *= h * h / (m * m) as f64;
        // the midpoint oracle itself is only second order
        assert!((s - lap[k]).abs() < 1e-5 * lap[k].abs().max(1e-3), "{s} vs {}", lap[k]);
    }

    #[test]
    fn perturbation_basics() {
        let eq = quadratic(64);
        let zero = TestFunction::new(PlanePoint::ORIGIN, 0.5, BumpProfile::Quartic, 0.0);
        assert_eq!(perturb_equilibrium(&eq, &zero).unwrap(), eq.measure);
        let f1 = TestFunction::new(PlanePoint::new(0.1, 0.0), 0.6, BumpProfile::Quartic, 0.01);
        let f2 = f1.with_amplitude(0.02);
        let m1 = perturb_equilibrium(&eq, &f1).unwrap();
        let m2 = perturb_equilibrium(&eq, &f2).unwrap();
        assert!((m1.mass() - eq.measure.mass()).abs() < 1e-12);
        for k in 0..m1.density().len() {
            let d0 = eq.measure.density()[k];
            let lin = 2.0 * (m1.density()[k] - d0) - (m2.density()[k] - d0);
            assert!(lin.abs() < 1e-12);
        }
        // support escaping and too-steep bumps are rejected
        let far = TestFunction::new(PlanePoint::new(0.9, 0.0), 0.6, BumpProfile::Quartic, 0.01);
        assert!(matches!(perturb_equilibrium(&eq, &far), Err(EquilibriumError::Precondition { .. })));
        let steep = f1.with_amplitude(-5.0);
        assert!(matches!(perturb_equilibrium(&eq, &steep), Err(EquilibriumError::Precondition { .. })));
    }

    #[test]
    fn dirichlet_energy_agrees() {
        let f = TestFunction::new(PlanePoint::new(0.2, 0.1), 0.4, BumpProfile::Quintic, 0.7);
        let (a, b) = dirichlet_energy_two_ways(&f);
        assert!((a - b).abs() < 1e-6 * b.abs(), "{a} {b}");
        assert!((b - f.gradient_l2() * f.gradient_l2()).abs() < 1e-9 * b);
    }

    #[test]
    fn el_residual_quadratic() {
        let eq = quadratic(64);
        let r = euler_lagrange_residual(&eq, &make_quadratic());
        assert!(r.on_support_max < 2e-2, "{r:?}");
        assert!(r.off_support_min > -1e-3, "{r:?}");
    }

    #[test]
    fn restriction_rejects_escaping_disk() {
        let eq = quadratic(64);
        let e = restriction_potential(&eq, &make_quadratic(), Disk::centered(1.2));
        assert!(matches!(e, Err(EquilibriumError::Precondition { .. })));
        let w = restriction_potential(&eq, &make_quadratic(), Disk::centered(0.5)).unwrap();
        assert_eq!(w.value(PlanePoint::new(0.6, 0.0)), f64::INFINITY);
        assert!(w.value(PlanePoint::new(0.2, 0.0)).is_finite());
    }
}
