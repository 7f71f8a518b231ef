use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{EquilibriumError, GridField, GridMeasure, GridSpec};
use crate::kernel::{rect_log_integral, PlanePoint};
use crate::potential::Potential;

/// Source cells within this Chebyshev distance (in cells) use the exact
/// cell integral; farther cells use the midpoint rule, which is already
/// fourth-order accurate because the kernel is harmonic there.
const EXACT_RANGE: f64 = 2.5;

/// `∫_cell log 1/|z − w| dw` for the square cell of side `h` centered at `c`.
#[inline]
fn cell_integral(z: PlanePoint, c: PlanePoint, h: f64) -> f64 {
    let dx = c.x - z.x;
    let dy = c.y - z.y;
    if dx.abs().max(dy.abs()) <= EXACT_RANGE * h {
        rect_log_integral(dx - 0.5 * h, dx + 0.5 * h, dy - 0.5 * h, dy + 0.5 * h)
    } else {
        -0.5 * (dx * dx + dy * dy).ln() * h * h
    }
}

/// `U^m(z) = ∫ log 1/|z − w| dm(w)` at arbitrary points by direct cell sum.
pub fn log_potential_direct(m: &GridMeasure, points: &[PlanePoint]) -> Vec<f64> {
    let g = m.grid;
    let h = g.h();
    let src: Vec<(PlanePoint, f64)> = m
        .density()
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(k, d)| (g.point(k), *d))
        .collect();
    points
        .iter()
        .map(|&z| src.iter().map(|&(c, d)| d * cell_integral(z, c, h)).sum())
        .collect()
}

/// `U^m` on `eval_grid`. On the measure's own grid this is an FFT
/// convolution with the cell-integral table; otherwise a direct sum.
pub fn log_potential_of_measure(m: &GridMeasure, eval_grid: GridSpec) -> GridField {
    if eval_grid == m.grid {
        let values = convolve_same_grid(m);
        return GridField { grid: eval_grid, values };
    }
    let pts: Vec<PlanePoint> = (0..eval_grid.len()).map(|k| eval_grid.point(k)).collect();
    GridField { grid: eval_grid, values: log_potential_direct(m, &pts) }
}

fn fft2(data: &mut [Complex64], size: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in data.chunks_mut(size) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); size];
    for i in 0..size {
        for j in 0..size {
            col[j] = data[j * size + i];
        }
        fft.process(&mut col);
        for j in 0..size {
            data[j * size + i] = col[j];
        }
    }
}

fn convolve_same_grid(m: &GridMeasure) -> Vec<f64> {
    let g = m.grid;
    let n = g.n;
    let h = g.h();
    let size = 2 * n;
    // kernel table indexed by offset (a, b) ∈ (−n, n)², wrapped into [0, 2n)
    let mut kern = vec![Complex64::new(0.0, 0.0); size * size];
    for b in 0..size {
        for a in 0..size {
            let oa = if a < n { a as f64 } else { a as f64 - size as f64 };
            let ob = if b < n { b as f64 } else { b as f64 - size as f64 };
            if a == n || b == n {
                continue; // offset ±n never occurs
            }
            let c = PlanePoint::new(oa * h, ob * h);
            kern[b * size + a].re = cell_integral(PlanePoint::ORIGIN, c, h);
        }
    }
    let mut src = vec![Complex64::new(0.0, 0.0); size * size];
    for j in 0..n {
        for i in 0..n {
            src[j * size + i].re = m.density()[g.index(i, j)];
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fft2(&mut kern, size, &fwd);
    fft2(&mut src, size, &fwd);
    for (s, k) in src.iter_mut().zip(&kern) {
        *s *= k;
    }
    fft2(&mut src, size, &inv);
    let norm = 1.0 / (size * size) as f64;
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            out[g.index(i, j)] = src[j * size + i].re * norm;
        }
    }
    out
}

/// Mutual energy `D(a, b) = ∫ U^a db`; both measures must share a grid.
pub fn pairing(a: &GridMeasure, b: &GridMeasure) -> Result<f64, EquilibriumError> {
    if a.grid != b.grid {
        return Err(EquilibriumError::Argument("pairing needs measures on the same grid".into()));
    }
    let u = log_potential_of_measure(a, a.grid);
    let h2 = a.grid.h() * a.grid.h();
    Ok(u.values.iter().zip(b.density()).map(|(u, d)| u * d).sum::<f64>() * h2)
}

/// `I_V(m) = D(m, m) + (V, m)` for a probability measure on a grid.
pub fn energy_functional(m: &GridMeasure, p: &Potential) -> Result<f64, EquilibriumError> {
    if (m.mass() - 1.0).abs() > 1e-6 {
        return Err(EquilibriumError::NotNormalized(m.mass()));
    }
    let g = m.grid;
    let mut vm = 0.0;
    let mut bad = 0;
    for (k, &d) in m.density().iter().enumerate() {
        if d > 0.0 {
            let v = p.value(g.point(k));
            if v.is_finite() {
                vm += d * v;
            } else {
                bad += 1;
            }
        }
    }
    if bad > 0 {
        return Err(EquilibriumError::InfiniteEnergy(bad));
    }
    let h2 = g.h() * g.h();
    Ok(pairing(m, m)? + vm * h2)
}
