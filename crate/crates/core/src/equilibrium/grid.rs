use std::sync::OnceLock;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::EquilibriumError;
use crate::kernel::{Disk, PlanePoint};

/// Uniform cell-centered `n × n` grid on the square `center + [−L, L]²`.
///
/// Cell `(i, j)` has center `center + (−L + (i + ½)h, −L + (j + ½)h)`;
/// arrays are stored row-major with index `j·n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: PlanePoint,
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(center: PlanePoint, half_width: f64, n: usize) -> Result<Self, EquilibriumError> {
        if n < 16 {
            return Err(EquilibriumError::Argument(format!("grid needs n ≥ 16, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) || !center.is_finite() {
            return Err(EquilibriumError::Argument(format!(
                "grid half width must be positive, got {half_width}"
            )));
        }
        Ok(Self { center, half_width, n })
    }

    /// Grid centered at the origin.
    pub fn square(half_width: f64, n: usize) -> Result<Self, EquilibriumError> {
        Self::new(PlanePoint::ORIGIN, half_width, n)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> PlanePoint {
        let h = self.h();
        PlanePoint::new(
            self.center.x - self.half_width + (i as f64 + 0.5) * h,
            self.center.y - self.half_width + (j as f64 + 0.5) * h,
        )
    }

    #[inline]
    pub fn point(&self, k: usize) -> PlanePoint {
        let (i, j) = self.coords(k);
        self.cell_center(i, j)
    }

    /// Cell containing `z`, if any.
    pub fn locate(&self, z: PlanePoint) -> Option<(usize, usize)> {
        let h = self.h();
        let fx = (z.x - self.center.x + self.half_width) / h;
        let fy = (z.y - self.center.y + self.half_width) / h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        (i < self.n && j < self.n).then_some((i, j))
    }

    /// Half the grid with the same box (for coarse-to-fine starts).
    pub fn coarsened(&self) -> Option<GridSpec> {
        (self.n % 2 == 0 && self.n / 2 >= 32).then_some(GridSpec { n: self.n / 2, ..*self })
    }

    /// Fraction of cell `(i, j)` covered by the closed disk, by `8×8`
    /// sub-cell sampling on cells the disk boundary crosses.
    pub fn disk_fraction(&self, i: usize, j: usize, disk: Disk) -> f64 {
        let c = self.cell_center(i, j);
        let h = self.h();
        let d = c.dist(disk.center);
        let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
        if d + half_diag <= disk.radius {
            return 1.0;
        }
        if d - half_diag > disk.radius {
            return 0.0;
        }
        let m = 8;
        let mut hit = 0;
        for a in 0..m {
            for b in 0..m {
                let p = PlanePoint::new(
                    c.x + h * ((a as f64 + 0.5) / m as f64 - 0.5),
                    c.y + h * ((b as f64 + 0.5) / m as f64 - 0.5),
                );
                if disk.contains(p) {
                    hit += 1;
                }
            }
        }
        hit as f64 / (m * m) as f64
    }
}

/// Real values on grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, EquilibriumError> {
        if values.len() != grid.len() {
            return Err(EquilibriumError::Argument(format!(
                "field has {} values for a {}×{} grid",
                values.len(),
                grid.n,
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(PlanePoint) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Bilinear interpolation between cell centers, clamped at the edge.
    pub fn interpolate(&self, z: PlanePoint) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let n = g.n;
        let fx = ((z.x - g.center.x + g.half_width) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let fy = ((z.y - g.center.y + g.half_width) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let (i0, j0) = ((fx.floor() as usize).min(n - 2), (fy.floor() as usize).min(n - 2));
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let v00 = self.at(i0, j0);
        let v10 = self.at(i0 + 1, j0);
        let v01 = self.at(i0, j0 + 1);
        let v11 = self.at(i0 + 1, j0 + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }
}

/// Piecewise-constant measure on grid cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMeasure {
    pub grid: GridSpec,
    density: Vec<f64>,
    mass: f64,
    #[serde(skip)]
    cumulative: OnceLock<Vec<f64>>,
}

impl PartialEq for GridMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.density == other.density
    }
}

impl GridMeasure {
    pub fn new(grid: GridSpec, density: Vec<f64>) -> Result<Self, EquilibriumError> {
        if density.len() != grid.len() {
            return Err(EquilibriumError::Argument(format!(
                "density has {} values for a {}×{} grid",
                density.len(),
                grid.n,
                grid.n
            )));
        }
        if let Some(k) = density.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(EquilibriumError::Argument(format!(
                "density must be finite and nonnegative, cell {:?} has {}",
                grid.coords(k),
                density[k]
            )));
        }
        let h2 = grid.h() * grid.h();
        let mass = density.iter().sum::<f64>() * h2;
        Ok(Self { grid, density, mass, cumulative: OnceLock::new() })
    }

    /// Cell averages of a density, using `sub × sub` midpoint samples per cell.
    pub fn from_density_fn(grid: GridSpec, sub: usize, rho: impl Fn(PlanePoint) -> f64) -> Result<Self, EquilibriumError> {
        let h = grid.h();
        let sub = sub.max(1);
        let density = (0..grid.len())
            .map(|k| {
                let c = grid.point(k);
                let mut s = 0.0;
                for a in 0..sub {
                    for b in 0..sub {
                        let p = PlanePoint::new(
                            c.x + h * ((a as f64 + 0.5) / sub as f64 - 0.5),
                            c.y + h * ((b as f64 + 0.5) / sub as f64 - 0.5),
                        );
                        s += rho(p);
                    }
                }
                s / (sub * sub) as f64
            })
            .collect();
        Self::new(grid, density)
    }

    /// Uniform probability measure on a disk, with exact-ish boundary cells.
    pub fn uniform_disk(grid: GridSpec, disk: Disk) -> Result<Self, EquilibriumError> {
        let dens = 1.0 / disk.area();
        let density = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                dens * grid.disk_fraction(i, j, disk)
            })
            .collect();
        Self::new(grid, density)
    }

    /// Unit point mass placed in the cell containing `z`.
    pub fn point_mass(grid: GridSpec, z: PlanePoint) -> Result<Self, EquilibriumError> {
        let (i, j) = grid
            .locate(z)
            .ok_or_else(|| EquilibriumError::Argument("point outside grid".into()))?;
        let mut density = vec![0.0; grid.len()];
        density[grid.index(i, j)] = 1.0 / (grid.h() * grid.h());
        Self::new(grid, density)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    #[inline]
    pub fn cell_mass(&self, k: usize) -> f64 {
        self.density[k] * self.grid.h() * self.grid.h()
    }

    /// `∫ g dm` by the cell-midpoint rule.
    pub fn integrate(&self, g: impl Fn(PlanePoint) -> f64) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        self.density
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(|(k, d)| d * g(self.grid.point(k)))
            .sum::<f64>()
            * h2
    }

    /// Draw a point from the normalized measure: a cell by mass, then a
    /// uniform position inside it.
    pub fn sample(&self, rng: &mut dyn RngCore) -> PlanePoint {
        let cum = self.cumulative.get_or_init(|| {
            let mut acc = 0.0;
            self.density
                .iter()
                .map(|d| {
                    acc += d;
                    acc
                })
                .collect()
        });
        let total = *cum.last().unwrap_or(&0.0);
        let t = rng.random::<f64>() * total;
        let k = cum.partition_point(|&c| c <= t).min(cum.len() - 1);
        let c = self.grid.point(k);
        let h = self.grid.h();
        PlanePoint::new(
            c.x + h * (rng.random::<f64>() - 0.5),
            c.y + h * (rng.random::<f64>() - 0.5),
        )
    }

    /// `μ(B)` with boundary cells weighted by covered area.
    pub fn mass_in_disk(&self, disk: Disk) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        let mut s = 0.0;
        for (k, &d) in self.density.iter().enumerate() {
            if d > 0.0 {
                let (i, j) = self.grid.coords(k);
                s += d * self.grid.disk_fraction(i, j, disk);
            }
        }
        s * h2
    }
}
