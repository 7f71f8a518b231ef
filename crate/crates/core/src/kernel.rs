//! Logarithmic interaction kernel, its disk-smoothed variant `l_r`, and the
//! small amount of plane geometry and complex arithmetic the rest of the
//! crate is written against.
//!
//! Everything here is a pure function of its inputs.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("coincident points at ({x}, {y})")]
    Coincident { x: f64, y: f64 },
    #[error("smoothing radius must be positive, got {0}")]
    BadRadius(f64),
}

/// A point of the plane, identified with a complex number `x + iy`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist_sqr(self, other: PlanePoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: PlanePoint) -> f64 {
        self.dist_sqr(other).sqrt()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn to_complex(self) -> Complex {
        Complex::new(self.x, self.y)
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    #[inline]
    fn add(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    #[inline]
    fn sub(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for PlanePoint {
    type Output = PlanePoint;
    #[inline]
    fn mul(self, s: f64) -> PlanePoint {
        PlanePoint::new(self.x * s, self.y * s)
    }
}

/// Closed disk `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: PlanePoint,
    pub radius: f64,
}

impl Disk {
    pub const fn new(center: PlanePoint, radius: f64) -> Self {
        Self { center, radius }
    }

    pub const fn centered(radius: f64) -> Self {
        Self { center: PlanePoint::ORIGIN, radius }
    }

    /// Closed-disk membership: boundary points are inside.
    #[inline]
    pub fn contains(&self, z: PlanePoint) -> bool {
        z.dist_sqr(self.center) <= self.radius * self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Complex number over a coordinate pair.
///
/// Only the arithmetic needed for Wirtinger calculus and Cauchy-type
/// difference quotients is provided.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
    pub const ONE: Complex = Complex { re: 1.0, im: 0.0 };
    pub const I: Complex = Complex { re: 0.0, im: 1.0 };

    #[inline]
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im * s)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// Wirtinger `∂ = ½(∂x − i∂y)` from the partial derivatives of a
    /// complex-valued function.
    #[inline]
    pub fn wirtinger_d(dx: Complex, dy: Complex) -> Complex {
        (dx - Complex::I * dy).scale(0.5)
    }

    /// Wirtinger `∂̄ = ½(∂x + i∂y)`.
    #[inline]
    pub fn wirtinger_dbar(dx: Complex, dy: Complex) -> Complex {
        (dx + Complex::I * dy).scale(0.5)
    }
}

impl From<PlanePoint> for Complex {
    fn from(p: PlanePoint) -> Self {
        Complex::new(p.x, p.y)
    }
}

impl From<f64> for Complex {
    fn from(re: f64) -> Self {
        Complex::new(re, 0.0)
    }
}

impl Add for Complex {
    type Output = Complex;
    #[inline]
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl AddAssign for Complex {
    #[inline]
    fn add_assign(&mut self, o: Complex) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl Sub for Complex {
    type Output = Complex;
    #[inline]
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for Complex {
    type Output = Complex;
    #[inline]
    fn neg(self) -> Complex {
        Complex::new(-self.re, -self.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Div for Complex {
    type Output = Complex;
    #[inline]
    fn div(self, o: Complex) -> Complex {
        let d = o.norm_sqr();
        Complex::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
}

/// `log 1/|z − w|`.
pub fn log_kernel(z: PlanePoint, w: PlanePoint) -> Result<f64, KernelError> {
    let d2 = z.dist_sqr(w);
    if d2 == 0.0 {
        return Err(KernelError::Coincident { x: z.x, y: z.y });
    }
    Ok(-0.5 * d2.ln())
}

/// The potential of the uniform probability measure on `B(0, r)`:
/// `½ + log 1/r − |z|²/(2r²)` inside the disk, `log 1/|z|` outside.
pub fn smoothed_log(z: PlanePoint, r: f64) -> Result<f64, KernelError> {
    check_radius(r)?;
    let q = z.norm_sqr();
    if q <= r * r {
        Ok(0.5 - r.ln() - q / (2.0 * r * r))
    } else {
        Ok(-0.5 * q.ln())
    }
}

/// Gradient and Laplacian of [`smoothed_log`].
///
/// On the seam `|z| = r` the inner-branch Laplacian `−2/r²` is returned.
pub fn smoothed_log_derivatives(z: PlanePoint, r: f64) -> Result<([f64; 2], f64), KernelError> {
    check_radius(r)?;
    let q = z.norm_sqr();
    let denom = q.max(r * r);
    let grad = [-z.x / denom, -z.y / denom];
    let lap = if q <= r * r { -2.0 / (r * r) } else { 0.0 };
    Ok((grad, lap))
}

fn check_radius(r: f64) -> Result<(), KernelError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(KernelError::BadRadius(r))
    }
}

/// Antiderivative `G` with `∂x∂y G = log(x² + y²)`.
fn log_sq_antiderivative(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let mut g = x * y * (r2.ln() - 3.0);
    if x != 0.0 {
        g += x * x * (y / x).atan();
    }
    if y != 0.0 {
        g += y * y * (x / y).atan();
    }
    g
}

/// Exact `∫∫ log 1/|w| dm(w)` over the axis-aligned rectangle
/// `[x0, x1] × [y0, y1]`.
pub fn rect_log_integral(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let g = log_sq_antiderivative;
    let s = g(x1, y1) - g(x0, y1) - g(x1, y0) + g(x0, y0);
    -0.5 * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn log_kernel_values() {
        let o = PlanePoint::ORIGIN;
        assert_eq!(log_kernel(o, PlanePoint::new(1.0, 0.0)).unwrap(), 0.0);
        let v = log_kernel(o, PlanePoint::new(2.0, 0.0)).unwrap();
        assert!((v + LN2).abs() < 1e-15);
        assert!(matches!(log_kernel(o, o), Err(KernelError::Coincident { .. })));
    }

    #[test]
    fn smoothed_log_branches() {
        assert!((smoothed_log(PlanePoint::ORIGIN, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((smoothed_log(PlanePoint::new(2.0, 0.0), 1.0).unwrap() + LN2).abs() < 1e-15);
        let seam = PlanePoint::new(0.5, 0.0);
        let inner = 0.5 - 0.5f64.ln() - 0.25 / (2.0 * 0.25);
        let outer = -(0.5f64.ln());
        assert!((inner - LN2).abs() < 1e-15);
        assert!((outer - LN2).abs() < 1e-15);
        assert!((smoothed_log(seam, 0.5).unwrap() - LN2).abs() < 1e-15);
        assert_eq!(smoothed_log(seam, 0.0), Err(KernelError::BadRadius(0.0)));
        assert!(smoothed_log(seam, -1.0).is_err());
    }

    #[test]
    fn smoothed_log_derivative_values() {
        let (g, _) = smoothed_log_derivatives(PlanePoint::ORIGIN, 1.0).unwrap();
        assert_eq!(g, [0.0, 0.0]);
        let (_, lap) = smoothed_log_derivatives(PlanePoint::new(0.5, 0.0), 1.0).unwrap();
        assert_eq!(lap, -2.0);
        let (_, lap) = smoothed_log_derivatives(PlanePoint::new(1.5, 0.0), 1.0).unwrap();
        assert_eq!(lap, 0.0);
        // seam convention
        let (_, lap) = smoothed_log_derivatives(PlanePoint::new(1.0, 0.0), 1.0).unwrap();
        assert_eq!(lap, -2.0);
        assert!(smoothed_log_derivatives(PlanePoint::ORIGIN, 0.0).is_err());
    }

    #[test]
    fn laplacian_mass_over_disk() {
        // midpoint quadrature of Δl_r on a fine lattice covering B(0, r)
        let r = 0.7;
        let m = 800;
        let h = 2.0 * r / m as f64;
        let mut total = 0.0;
        for i in 0..m {
            for j in 0..m {
                let z = PlanePoint::new(-r + (i as f64 + 0.5) * h, -r + (j as f64 + 0.5) * h);
                if z.norm() < r {
                    total += smoothed_log_derivatives(z, r).unwrap().1 * h * h;
                }
            }
        }
        assert!((total + 2.0 * PI).abs() < 2e-2, "{total}");
    }

    #[test]
    fn rect_integral_matches_subdivided_midpoint() {
        // away from the singularity a fine midpoint rule is an adequate oracle
        let (x0, x1, y0, y1) = (0.3, 0.9, -0.2, 0.5);
        let m = 600;
        let (hx, hy) = ((x1 - x0) / m as f64, (y1 - y0) / m as f64);
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = x0 + (i as f64 + 0.5) * hx;
                let y = y0 + (j as f64 + 0.5) * hy;
                s += -0.5 * (x * x + y * y).ln() * hx * hy;
            }
        }
        assert!((rect_log_integral(x0, x1, y0, y1) - s).abs() < 1e-7);
        // a cell centered on the singularity: polar-coordinate oracle for the
        // unit square [-½,½]²; ∫ over the square of log 1/|w| equals
        // 8 ∫_0^{π/4} ∫_0^{sec θ/2} −ρ log ρ dρ dθ.
        let n = 20000;
        let dt = (PI / 4.0) / n as f64;
        let mut polar = 0.0;
        for k in 0..n {
            let t = (k as f64 + 0.5) * dt;
            let big_r = 0.5 / t.cos();
            // ∫_0^R −ρ log ρ dρ = R²/4 − R² log R / 2
            polar += (big_r * big_r / 4.0 - big_r * big_r * big_r.ln() / 2.0) * dt;
        }
        polar *= 8.0;
        assert!((rect_log_integral(-0.5, 0.5, -0.5, 0.5) - polar).abs() < 1e-8);
    }

    #[test]
    fn complex_wirtinger_real_function() {
        // real f ⇒ conj(∂̄f) = ∂f
        let fx = Complex::from(0.3);
        let fy = Complex::from(-1.7);
        let d = Complex::wirtinger_d(fx, fy);
        let dbar = Complex::wirtinger_dbar(fx, fy);
        assert_eq!(d, dbar.conj());
        let a = Complex::new(1.0, 2.0);
        let b = Complex::new(-0.5, 0.25);
        let q = (a * b) / b;
        assert!((q - a).abs() < 1e-15);
    }

    fn pt() -> impl Strategy<Value = PlanePoint> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| PlanePoint::new(x, y))
    }

    proptest! {
        #[test]
        fn log_kernel_symmetric(z in pt(), w in pt()) {
            prop_assume!(z != w);
            prop_assert_eq!(log_kernel(z, w).unwrap(), log_kernel(w, z).unwrap());
        }

        #[test]
        fn smoothed_log_matches_kernel_outside(z in pt(), r in 0.01f64..2.0) {
            prop_assume!(z.norm() >= r);
            let exact = log_kernel(PlanePoint::ORIGIN, z).unwrap();
            prop_assert_eq!(smoothed_log(z, r).unwrap(), exact);
        }

        #[test]
        fn newton_bound(z in pt(), r in 0.01f64..3.0) {
            prop_assume!(z.norm_sqr() > 0.0);
            let exact = log_kernel(PlanePoint::ORIGIN, z).unwrap();
            prop_assert!(smoothed_log(z, r).unwrap() <= exact + 1e-14);
        }

        #[test]
        fn gradient_matches_finite_differences(z in pt(), r in 0.1f64..2.0) {
            let h = 1e-5;
            prop_assume!((z.norm() - r).abs() > 10.0 * h);
            let (g, _) = smoothed_log_derivatives(z, r).unwrap();
            let f = |p: PlanePoint| smoothed_log(p, r).unwrap();
            let gx = (f(PlanePoint::new(z.x + h, z.y)) - f(PlanePoint::new(z.x - h, z.y))) / (2.0 * h);
            let gy = (f(PlanePoint::new(z.x, z.y + h)) - f(PlanePoint::new(z.x, z.y - h))) / (2.0 * h);
            let scale = 1.0 + g[0].abs() + g[1].abs();
            prop_assert!((gx - g[0]).abs() < 1e-6 * scale);
            prop_assert!((gy - g[1]).abs() < 1e-6 * scale);
        }
    }
}
