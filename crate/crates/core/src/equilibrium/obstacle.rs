use std::f64::consts::PI;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::logpot::log_potential_direct;
use super::{EquilibriumError, EquilibriumMeasure, GridField, GridMeasure, GridSpec};
use crate::kernel::{Disk, PlanePoint};
use crate::potential::Potential;

/// Controls for [`solve_obstacle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleOptions {
    /// Stop sweeping once the largest single-cell update is below this.
    pub tol: f64,
    /// Sweep budget for each inner solve.
    pub max_iter: usize,
    /// Accepted `|mass − 1|`.
    pub mass_tol: f64,
    /// Start from solutions on successively halved grids.
    pub multilevel: bool,
    /// Extra passes replacing the `log|z − center|` far field by the
    /// potential of the current measure on the boundary ring.
    pub far_field_passes: usize,
}

impl Default for ObstacleOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200_000, mass_tol: 1e-7, multilevel: true, far_field_passes: 0 }
    }
}

impl ObstacleOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// Sweeps over all levels and outer iterations.
    pub sweeps: usize,
    /// Mass evaluations on the finest grid.
    pub outer_iterations: usize,
    /// Last largest single-cell update.
    pub final_update: f64,
    /// `max |min(V/2 − u, avg − u)|` over interior cells.
    pub complementarity: f64,
    /// Smallest `avg − u` over interior cells (discrete `h²Δu/4`).
    pub min_laplacian: f64,
    /// Smallest `V/2 − u` over interior cells.
    pub min_slack: f64,
    pub mass: f64,
    pub support_cells: usize,
}

/// Solution of the obstacle problem on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub u: GridField,
    pub measure: GridMeasure,
    pub support_mask: Vec<bool>,
    /// The constant `F_V`.
    pub f_constant: f64,
    pub diagnostics: SolverDiagnostics,
}

impl EquilibriumResult {
    pub fn grid(&self) -> GridSpec {
        self.u.grid
    }

    /// Largest distance from `center` to a support cell center.
    pub fn support_radius_estimate(&self, center: PlanePoint) -> f64 {
        let g = self.grid();
        self.support_mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(k, _)| g.point(k).dist(center))
            .fold(0.0, f64::max)
    }

    /// Cells whose centers lie in the closed disk.
    pub fn cells_in_disk(&self, disk: Disk) -> impl Iterator<Item = usize> + '_ {
        let g = self.grid();
        (0..g.len()).filter(move |&k| disk.contains(g.point(k)))
    }
}

impl EquilibriumMeasure for EquilibriumResult {
    fn density_at(&self, z: PlanePoint) -> f64 {
        let g = self.grid();
        g.locate(z).map_or(0.0, |(i, j)| self.measure.density()[g.index(i, j)])
    }

    fn mass_in_disk(&self, disk: Disk) -> f64 {
        self.measure.mass_in_disk(disk)
    }

    fn integrate(&self, g: &dyn Fn(PlanePoint) -> f64, support: Disk) -> f64 {
        let grid = self.grid();
        let h = grid.h();
        let reach = support.radius + h;
        let h2 = h * h;
        let mut acc = 0.0;
        for (k, &d) in self.measure.density().iter().enumerate() {
            if d > 0.0 {
                let z = grid.point(k);
                if z.dist(support.center) <= reach {
                    acc += d * g(z);
                }
            }
        }
        acc * h2
    }

    fn sample(&self, rng: &mut dyn RngCore) -> PlanePoint {
        self.measure.sample(rng)
    }

    fn contains_disk(&self, disk: Disk) -> bool {
        let g = self.grid();
        let grown = Disk { center: disk.center, radius: disk.radius + 1.5 * g.h() };
        self.cells_in_disk(grown).all(|k| self.support_mask[k])
    }
}

struct Problem {
    n: usize,
    psi: Vec<f64>,
    /// Far-field profile on the boundary ring (zero elsewhere).
    ring: Vec<f64>,
    omega: f64,
}

impl Problem {
    fn new(p: &Potential, grid: GridSpec, far: &dyn Fn(PlanePoint) -> f64) -> Self {
        let n = grid.n;
        let psi = (0..grid.len()).map(|k| 0.5 * p.value(grid.point(k))).collect();
        let mut ring = vec![0.0; grid.len()];
        for (k, r) in ring.iter_mut().enumerate() {
            let (i, j) = grid.coords(k);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                *r = far(grid.point(k));
            }
        }
        let omega = 2.0 / (1.0 + (PI / n as f64).sin());
        Self { n, psi, ring, omega }
    }

    fn is_ring(&self, k: usize) -> bool {
        let (i, j) = (k % self.n, k / self.n);
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// Largest admissible far-field constant: boundary data must stay
    /// below the obstacle.
    fn c_max(&self) -> f64 {
        (0..self.psi.len())
            .filter(|&k| self.is_ring(k))
            .map(|k| self.psi[k] - self.ring[k])
            .fold(f64::INFINITY, f64::min)
    }

    fn set_boundary(&self, u: &mut [f64], c: f64) {
        for k in 0..u.len() {
            if self.is_ring(k) {
                u[k] = self.ring[k] + c;
            }
        }
    }

    /// Red-black projected SOR until the largest update is below `tol`.
    fn psor(&self, u: &mut [f64], tol: f64, max_iter: usize) -> Result<(usize, f64), usize> {
        let n = self.n;
        let mut last = f64::INFINITY;
        for sweep in 1..=max_iter {
            let mut big: f64 = 0.0;
            for color in 0..2 {
                for j in 1..n - 1 {
                    let start = 1 + (j + 1 + color) % 2;
                    let row = j * n;
                    let mut i = start;
                    while i < n - 1 {
                        let k = row + i;
                        let avg = 0.25 * (u[k - 1] + u[k + 1] + u[k - n] + u[k + n]);
                        let old = u[k];
                        let new = (old + self.omega * (avg - old)).min(self.psi[k]);
                        u[k] = new;
                        big = big.max((new - old).abs());
                        i += 2;
                    }
                }
            }
            last = big;
            if big <= tol {
                return Ok((sweep, last));
            }
        }
        let _ = last;
        Err(max_iter)
    }

    #[inline]
    fn excess(&self, u: &[f64], k: usize) -> f64 {
        let n = self.n;
        0.25 * (u[k - 1] + u[k + 1] + u[k - n] + u[k + n]) - u[k]
    }

    fn mask(&self, u: &[f64], tol: f64) -> Vec<bool> {
        (0..u.len())
            .map(|k| !self.is_ring(k) && self.psi[k] - u[k] <= 10.0 * tol)
            .collect()
    }

    /// `Σ Δ_h u h² / 2π` over the coincidence set.
    fn mass(&self, u: &[f64], tol: f64) -> f64 {
        let mask = self.mask(u, tol);
        let s: f64 = (0..u.len())
            .filter(|&k| mask[k])
            .map(|k| self.excess(u, k).max(0.0))
            .sum();
        2.0 * s / PI
    }
}

struct Level {
    u: Vec<f64>,
    c: f64,
    sweeps: usize,
    evaluations: usize,
    final_update: f64,
}

struct Evaluator<'a> {
    prob: &'a Problem,
    opts: &'a ObstacleOptions,
    sweeps: usize,
    evaluations: usize,
    final_update: f64,
    /// Most recent `(c, u)`, used as the warm start for the next solve.
    last: (f64, Vec<f64>),
}

impl Evaluator<'_> {
    /// Solve with far-field constant `c`; returns `mass − 1` and `u`.
    fn eval(&mut self, c: f64) -> Result<(f64, Vec<f64>), EquilibriumError> {
        let prob = self.prob;
        let shift = c - self.last.0;
        let mut u: Vec<f64> =
            self.last.1.iter().zip(&prob.psi).map(|(u, p)| (u + shift).min(*p)).collect();
        prob.set_boundary(&mut u, c);
        match prob.psor(&mut u, self.opts.tol, self.opts.max_iter) {
            Ok((s, upd)) => {
                self.sweeps += s;
                self.final_update = upd;
            }
            Err(it) => {
                let m = prob.mass(&u, self.opts.tol);
                return Err(EquilibriumError::NonConvergence { iterations: it, residual: f64::NAN, mass: m });
            }
        }
        self.evaluations += 1;
        let m = prob.mass(&u, self.opts.tol) - 1.0;
        self.last = (c, u.clone());
        Ok((m, u))
    }

    fn done(self, u: Vec<f64>, c: f64) -> Level {
        Level { u, c, sweeps: self.sweeps, evaluations: self.evaluations, final_update: self.final_update }
    }
}

fn solve_level(
    prob: &Problem,
    opts: &ObstacleOptions,
    start: Vec<f64>,
    c_guess: f64,
) -> Result<Level, EquilibriumError> {
    let c_max = prob.c_max();
    let mut ev = Evaluator { prob, opts, sweeps: 0, evaluations: 0, final_update: 0.0, last: (c_guess, start) };
    let c0 = c_guess.min(c_max);
    let (m0, u0) = ev.eval(c0)?;
    if m0.abs() <= opts.mass_tol {
        return Ok(ev.done(u0, c0));
    }
    // bracket the root: mass(c) is nondecreasing in c
    let mut step = 0.05;
    let (mut a, mut fa, mut b, mut fb);
    if m0 < 0.0 {
        (a, fa) = (c0, m0);
        loop {
            let c = (a + step).min(c_max);
            let (m, _) = ev.eval(c)?;
            if m >= 0.0 {
                (b, fb) = (c, m);
                break;
            }
            if c >= c_max {
                return Err(EquilibriumError::BoxTooSmall);
            }
            (a, fa) = (c, m);
            step *= 2.0;
            if step > 1e8 {
                return Err(EquilibriumError::NormalizationUnreachable(c));
            }
        }
    } else {
        (b, fb) = (c0, m0);
        loop {
            let c = b - step;
            let (m, _) = ev.eval(c)?;
            if m < 0.0 {
                (a, fa) = (c, m);
                break;
            }
            (b, fb) = (c, m);
            step *= 2.0;
            if step > 1e8 {
                return Err(EquilibriumError::NormalizationUnreachable(c));
            }
        }
    }
    // Illinois false position
    let mut side = 0i8;
    for _ in 0..200 {
        let c = if fb - fa > 0.0 { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let (m, u) = ev.eval(c)?;
        if m.abs() <= opts.mass_tol || (b - a) < 1e-15 * (1.0 + c.abs()) {
            return Ok(ev.done(u, c));
        }
        if m < 0.0 {
            (a, fa) = (c, m);
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            (b, fb) = (c, m);
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(EquilibriumError::NonConvergence { iterations: ev.sweeps, residual: ev.final_update, mass: 1.0 + fa.min(fb) })
}

fn far_field_log(center: PlanePoint, h: f64) -> impl Fn(PlanePoint) -> f64 {
    move |z| z.dist(center).max(0.5 * h).ln()
}

/// Equilibrium measure by the obstacle problem
/// `u = max{v subharmonic : v ≤ V/2, v − log|z| bounded above}`,
/// with `μ_V = Δu/2π`.
///
/// The box boundary carries `log|z − center| + c`; `c` is tuned until the
/// discrete measure has mass one and is returned as `F_V`.
pub fn solve_obstacle(
    p: &Potential,
    grid: GridSpec,
    opts: &ObstacleOptions,
) -> Result<EquilibriumResult, EquilibriumError> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 || !(opts.mass_tol > 0.0) {
        return Err(EquilibriumError::Argument("tolerances and sweep budget must be positive".into()));
    }
    let mut total_sweeps = 0;
    // coarse start
    let (start, c_guess) = match grid.coarsened().filter(|_| opts.multilevel) {
        Some(coarse) => {
            let inner = ObstacleOptions { far_field_passes: 0, ..*opts };
            let sol = solve_obstacle(p, coarse, &inner)?;
            total_sweeps += sol.diagnostics.sweeps;
            let u0: Vec<f64> = (0..grid.len()).map(|k| sol.u.interpolate(grid.point(k))).collect();
            (u0, sol.f_constant)
        }
        None => {
            let far = far_field_log(grid.center, grid.h());
            let prob = Problem::new(p, grid, &far);
            let c = prob.c_max();
            let c = if c.is_finite() { c } else { 0.0 };
            let u0 = (0..grid.len()).map(|k| (far(grid.point(k)) + c).min(prob.psi[k])).collect();
            (u0, c)
        }
    };
    let far = far_field_log(grid.center, grid.h());
    let mut prob = Problem::new(p, grid, &far);
    if prob.psi.iter().any(|v| v.is_nan()) {
        return Err(EquilibriumError::Argument("potential is NaN on the grid".into()));
    }
    let mut level = solve_level(&prob, opts, start, c_guess)?;
    total_sweeps += level.sweeps;
    for _ in 0..opts.far_field_passes {
        let m = measure_from(&prob, &level.u, grid, opts.tol)?;
        let ring_pts: Vec<usize> = (0..grid.len()).filter(|&k| prob.is_ring(k)).collect();
        let pts: Vec<PlanePoint> = ring_pts.iter().map(|&k| grid.point(k)).collect();
        let pot = log_potential_direct(&m, &pts);
        for (&k, v) in ring_pts.iter().zip(pot) {
            prob.ring[k] = -v / m.mass();
        }
        let u = std::mem::take(&mut level.u);
        let c = level.c;
        let evals = level.evaluations;
        level = solve_level(&prob, opts, u, c)?;
        level.evaluations += evals;
        total_sweeps += level.sweeps;
    }
    let u = level.u;
    let mask = prob.mask(&u, opts.tol);
    let n = grid.n;
    for (k, &m) in mask.iter().enumerate() {
        if m {
            let (i, j) = grid.coords(k);
            if i <= 1 || j <= 1 || i >= n - 2 || j >= n - 2 {
                return Err(EquilibriumError::BoxTooSmall);
            }
        }
    }
    let measure = measure_from(&prob, &u, grid, opts.tol)?;
    let mut compl: f64 = 0.0;
    let mut min_lap = f64::INFINITY;
    let mut min_slack = f64::INFINITY;
    for k in 0..u.len() {
        if prob.is_ring(k) {
            continue;
        }
        let ex = prob.excess(&u, k);
        let slack = prob.psi[k] - u[k];
        compl = compl.max(slack.min(ex).abs());
        min_lap = min_lap.min(ex);
        min_slack = min_slack.min(slack);
    }
    let diagnostics = SolverDiagnostics {
        sweeps: total_sweeps,
        outer_iterations: level.evaluations,
        final_update: level.final_update,
        complementarity: compl,
        min_laplacian: min_lap,
        min_slack,
        mass: measure.mass(),
        support_cells: mask.iter().filter(|m| **m).count(),
    };
    Ok(EquilibriumResult {
        u: GridField { grid, values: u },
        measure,
        support_mask: mask,
        f_constant: level.c,
        diagnostics,
    })
}

fn measure_from(prob: &Problem, u: &[f64], grid: GridSpec, tol: f64) -> Result<GridMeasure, EquilibriumError> {
    let mask = prob.mask(u, tol);
    let h2 = grid.h() * grid.h();
    let density = (0..u.len())
        .map(|k| if mask[k] { 4.0 * prob.excess(u, k).max(0.0) / h2 / (2.0 * PI) } else { 0.0 })
        .collect();
    GridMeasure::new(grid, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{make_quadratic, make_radial};

    #[test]
    fn quadratic_coarse() {
        let grid = GridSpec::square(2.0, 64).unwrap();
        let eq = solve_obstacle(&make_quadratic(), grid, &ObstacleOptions::default()).unwrap();
        assert!((eq.measure.mass() - 1.0).abs() < 1e-6);
        assert!((eq.f_constant - 0.5).abs() < 2e-2, "F = {}", eq.f_constant);
        let h = grid.h();
        assert!((eq.support_radius_estimate(PlanePoint::ORIGIN) - 1.0).abs() < 2.0 * h);
        for k in eq.cells_in_disk(Disk::centered(0.8)).collect::<Vec<_>>() {
            let d = eq.measure.density()[k];
            assert!((d * PI - 1.0).abs() < 0.03, "cell {k}: {d}");
        }
        // obstacle inequality away from the support
        for k in 0..grid.len() {
            let z = grid.point(k);
            if z.norm() > 1.0 + 4.0 * h {
                assert!(eq.u.values[k] - 0.5 * z.norm_sqr() < 0.0);
            }
        }
    }

    #[test]
    fn quartic_support_radius() {
        let grid = GridSpec::square(1.5, 64).unwrap();
        let eq = solve_obstacle(&make_radial(&[0.0, 1.0]).unwrap(), grid, &ObstacleOptions::default()).unwrap();
        let r = 2f64.powf(-0.25);
        assert!((eq.support_radius_estimate(PlanePoint::ORIGIN) - r).abs() < 2.0 * grid.h());
    }

    #[test]
    fn box_too_small() {
        let grid = GridSpec::square(0.9, 32).unwrap();
        let e = solve_obstacle(&make_quadratic(), grid, &ObstacleOptions::default());
        assert_eq!(e.unwrap_err(), EquilibriumError::BoxTooSmall);
    }

    #[test]
    fn sweep_budget_exhaustion_is_reported() {
        let grid = GridSpec::square(2.0, 32).unwrap();
        let e = solve_obstacle(&make_quadratic(), grid, &ObstacleOptions::new(1e-12, 3));
        assert!(matches!(e, Err(EquilibriumError::NonConvergence { .. })));
    }
}
