use serde::{Deserialize, Serialize};

use super::loops::{build_h, LoopFunction};
use super::ObservableError;
use crate::bump::TestFunction;
use crate::equilibrium::GridMeasure;
use crate::kernel::{Complex, PlanePoint};
use crate::potential::Potential;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KvRow {
    pub x: f64,
    pub y: f64,
    /// `K_V g(z)` with `g = ∂̄f/ΔV`.
    pub value: Complex,
    /// `f(z)/4`.
    pub target: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KvReport {
    pub grid_n: usize,
    pub sup_error: f64,
    pub worst: PlanePoint,
    pub rows: Vec<KvRow>,
}

/// Square lattice of spacing `ρ/k` over `B(z₀, 1.25ρ)`, `ρ` the bump's
/// support radius.
pub fn default_stencil(f: &TestFunction, k: usize) -> Vec<PlanePoint> {
    let c = f.center();
    let reach = 1.25 * f.support_radius();
    let step = f.support_radius() / k as f64;
    let m = (reach / step).floor() as i64;
    let mut out = Vec::new();
    for j in -m..=m {
        for i in -m..=m {
            let z = PlanePoint::new(c.x + i as f64 * step, c.y + j as f64 * step);
            if z.dist(c) <= reach {
                out.push(z);
            }
        }
    }
    out
}

fn require_support(mu: &GridMeasure, z: PlanePoint) -> Result<(), ObservableError> {
    let g = &mu.grid;
    match g.locate(z) {
        Some((i, j)) if mu.density()[g.index(i, j)] > 0.0 => Ok(()),
        _ => Err(ObservableError::StencilOutsideSupport(z)),
    }
}

/// Sup over `stencil` of `|K_V g − f/4|`, `g = ∂̄f/ΔV`, where
/// `K_V g(z) = −∫ (g(z) − g(w))/(z − w) dμ_V(w) + ∂V(z) g(z)`.
///
/// The integral is a cell-center sum over `mu`; on the cell containing
/// `z` the difference quotient is replaced by its angular mean `∂g(z)`.
pub fn kv_identity_check(
    f: &TestFunction,
    mu: &GridMeasure,
    p: &Potential,
    stencil: &[PlanePoint],
) -> Result<KvReport, ObservableError> {
    let h = build_h(f, p)?;
    let c = f.center();
    let r = f.support_radius();
    require_support(mu, c)?;
    for k in 0..32 {
        let th = std::f64::consts::TAU * k as f64 / 32.0;
        require_support(mu, PlanePoint::new(c.x + r * th.cos(), c.y + r * th.sin()))?;
    }
    let grid = &mu.grid;
    let cells: Vec<(PlanePoint, Complex, f64)> = (0..grid.len())
        .filter(|&k| mu.density()[k] > 0.0)
        .map(|k| {
            let w = grid.point(k);
            (w, h.h(w).scale(0.25), mu.cell_mass(k))
        })
        .collect();
    let mut rows = Vec::with_capacity(stencil.len());
    let mut sup = 0.0;
    let mut worst = PlanePoint::ORIGIN;
    for &z in stencil {
        require_support(mu, z)?;
        let own = grid.locate(z).map(|(i, j)| grid.point(grid.index(i, j)));
        let gz = h.h(z).scale(0.25);
        let dgz = h.dh(z).scale(0.25);
        let zc = z.to_complex();
        let mut integral = Complex::default();
        for &(w, gw, m) in &cells {
            let q = if Some(w) == own { dgz } else { (gz - gw) / (zc - w.to_complex()) };
            integral += q.scale(m);
        }
        let value = p.d(z)? * gz - integral;
        let target = 0.25 * f.value(z);
        let err = (value - Complex::new(target, 0.0)).abs();
        if err > sup {
            sup = err;
            worst = z;
        }
        rows.push(KvRow { x: z.x, y: z.y, value, target });
    }
    Ok(KvReport { grid_n: grid.n, sup_error: sup, worst, rows })
}

/// Both sides of `½∬ (f(z) − f(w))/(z − w) dμ dμ = ∫ f ∂V dμ`, by the
/// same cell-center rule as [`kv_identity_check`] (diagonal: `∂f`).
pub fn elff_identity(f: &TestFunction, mu: &GridMeasure, p: &Potential) -> Result<(Complex, Complex), ObservableError> {
    let grid = &mu.grid;
    let cells: Vec<(PlanePoint, f64, f64)> = (0..grid.len())
        .filter(|&k| mu.density()[k] > 0.0)
        .map(|k| {
            let w = grid.point(k);
            (w, f.value(w), mu.cell_mass(k))
        })
        .collect();
    let near = |w: PlanePoint| w.dist(f.center()) < f.support_radius();
    let mut lhs = Complex::default();
    let mut rhs = Complex::default();
    for (a, &(z, fz, mz)) in cells.iter().enumerate() {
        if !near(z) {
            continue;
        }
        rhs += p.d(z)?.scale(fz * mz);
        let zc = z.to_complex();
        for (b, &(w, fw, mw)) in cells.iter().enumerate() {
            let q = if a == b { f.d(z) } else { Complex::new(fz - fw, 0.0) / (zc - w.to_complex()) };
            // pairs with both ends near the bump are visited twice
            let weight = if near(w) { 0.5 } else { 1.0 };
            lhs += q.scale(weight * mz * mw);
        }
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::BumpProfile;
    use crate::equilibrium::{solve_equilibrium_radial, GridSpec};
    use crate::potential::make_quadratic;

    fn setup(n: usize) -> (TestFunction, GridMeasure, Potential) {
        let q = make_quadratic();
        let eq = solve_equilibrium_radial(&q).unwrap();
        let mu = eq.to_grid_measure(GridSpec::square(2.0, n).unwrap()).unwrap();
        (TestFunction::new(PlanePoint::new(0.1, 0.05), 0.6, BumpProfile::Quintic, 1.0), mu, q)
    }

    #[test]
    fn zero_bump_is_identically_zero() {
        let (f, mu, q) = setup(64);
        let z = f.with_amplitude(0.0);
        let rep = kv_identity_check(&z, &mu, &q, &default_stencil(&f, 3)).unwrap();
        assert_eq!(rep.sup_error, 0.0);
    }

    #[test]
    fn identity_holds_on_a_coarse_grid() {
        let (f, mu, q) = setup(128);
        let rep = kv_identity_check(&f, &mu, &q, &default_stencil(&f, 4)).unwrap();
        assert!(rep.sup_error < 5e-2, "{}", rep.sup_error);
        let (l, r) = elff_identity(&f, &mu, &q).unwrap();
        assert!((l - r).abs() < 1e-2 * r.abs().max(1e-2), "{l:?} {r:?}");
    }

    #[test]
    fn stencil_outside_support_is_rejected() {
        let (f, mu, q) = setup(64);
        let far = [PlanePoint::new(1.5, 0.0)];
        assert!(matches!(kv_identity_check(&f, &mu, &q, &far), Err(ObservableError::StencilOutsideSupport(_))));
    }
}
