//! Compactly supported polynomial bumps `f(z) = A (1 − |z − z₀|²/ρ²)^p` on
//! `B(z₀, ρ)`, with derivative norms recorded at construction.
//!
//! The bump is a polynomial in `(x, y)` inside its support, so every
//! derivative below is exact. Sup-norms of the higher derivative tensors are
//! maximized once per profile on the unit bump and rescaled: for support
//! radius `ρ`, `‖∇^l f‖∞ = |A| C_l / ρ^l`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::kernel::{Complex, PlanePoint};

/// Named bump shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpProfile {
    /// `(1 − u²)⁴`: C³ with bounded fourth derivatives.
    Quartic,
    /// `(1 − u²)⁵`: C⁴.
    Quintic,
}

impl BumpProfile {
    pub fn power(self) -> u32 {
        match self {
            BumpProfile::Quartic => 4,
            BumpProfile::Quintic => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BumpProfile::Quartic => "quartic",
            BumpProfile::Quintic => "quintic",
        }
    }

    fn unit_norms(self) -> &'static UnitNorms {
        static QUARTIC: OnceLock<UnitNorms> = OnceLock::new();
        static QUINTIC: OnceLock<UnitNorms> = OnceLock::new();
        let cell = match self {
            BumpProfile::Quartic => &QUARTIC,
            BumpProfile::Quintic => &QUINTIC,
        };
        cell.get_or_init(|| UnitNorms::compute(self.power()))
    }
}

/// Norm constants of the unit bump (`A = 1`, `ρ = 1`).
#[derive(Debug, Clone)]
struct UnitNorms {
    /// `sup |∇^l f|` for `l = 0..=4`, tensor norm as the maximal `l`-th
    /// directional derivative.
    derivative: [f64; 5],
    laplacian: f64,
    gradient_l2: f64,
}

impl UnitNorms {
    fn compute(p: u32) -> Self {
        let mut derivative = [0.0; 5];
        derivative[0] = 1.0;
        for (l, slot) in derivative.iter_mut().enumerate().skip(1) {
            *slot = max_directional_derivative(p, l) * (1.0 + 1e-12);
        }
        let lap = |v: f64| 4.0 * (v * dpoly(p, 2, v) + dpoly(p, 1, v));
        let laplacian = maximize_1d(|v| lap(v).abs(), 0.0, 1.0) * (1.0 + 1e-12);
        let pf = p as f64;
        let gradient_l2 = (2.0 * PI * pf / (2.0 * pf - 1.0)).sqrt();
        UnitNorms { derivative, laplacian, gradient_l2 }
    }
}

/// `x^k` by repeated multiplication; `powi` may constant-fold differently
/// from its runtime path.
#[inline]
pub(crate) fn ipow(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= x;
    }
    acc
}

/// `d^k/dv^k (1 − v)^p`.
fn dpoly(p: u32, k: u32, v: f64) -> f64 {
    if k > p {
        return 0.0;
    }
    let mut c = 1.0;
    for j in 0..k {
        c *= -((p - j) as f64);
    }
    c * ipow(1.0 - v, p - k)
}

/// `l`-th derivative in `s` at `s = 0` of `(1 − |x + s e|²)^p` where
/// `|x|² = a` and `x·e = b`.
fn directional_derivative(p: u32, l: usize, a: f64, b: f64) -> f64 {
    // (c − 2bs − s²)^p by repeated polynomial multiplication in s
    let base = [1.0 - a, -2.0 * b, -1.0];
    let mut poly = vec![1.0];
    for _ in 0..p {
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &pi) in poly.iter().enumerate() {
            for (j, &bj) in base.iter().enumerate() {
                next[i + j] += pi * bj;
            }
        }
        poly = next;
    }
    let fact: f64 = (1..=l).map(|k| k as f64).product();
    poly.get(l).copied().unwrap_or(0.0) * fact
}

fn max_directional_derivative(p: u32, l: usize) -> f64 {
    // radial symmetry: x = (r, 0), b = r cos θ with θ ∈ [0, π]
    let eval = |r: f64, th: f64| {
        let r = r.clamp(0.0, 1.0);
        directional_derivative(p, l, r * r, r * th.cos()).abs()
    };
    let (nr, nt) = (240, 240);
    let mut best = (0.0, 0.0, 0.0);
    for i in 0..=nr {
        let r = i as f64 / nr as f64;
        for j in 0..=nt {
            let th = PI * j as f64 / nt as f64;
            let v = eval(r, th);
            if v > best.0 {
                best = (v, r, th);
            }
        }
    }
    // pattern search refinement around the best lattice point
    let (mut v, mut r, mut th) = best;
    let mut step = (1.0 / nr as f64, PI / nt as f64);
    for _ in 0..200 {
        let mut improved = false;
        for (dr, dt) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let rc = (r + dr * step.0).clamp(0.0, 1.0);
            let tc = (th + dt * step.1).clamp(0.0, PI);
            let vc = eval(rc, tc);
            if vc > v {
                (v, r, th) = (vc, rc, tc);
                improved = true;
            }
        }
        if !improved {
            step = (step.0 * 0.5, step.1 * 0.5);
            if step.0 < 1e-14 {
                break;
            }
        }
    }
    v
}

fn maximize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 10_000;
    let mut best = (f(lo), lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    let (mut a, mut b) = (
        (best.1 - (hi - lo) / n as f64).max(lo),
        (best.1 + (hi - lo) / n as f64).min(hi),
    );
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    best.0.max(f(0.5 * (a + b)))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct TestFunctionSpec {
    center: PlanePoint,
    scale: f64,
    profile: BumpProfile,
    amplitude: f64,
}

/// A smooth bump `f` supported in `B(z₀, t/2)` where `t` is the scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TestFunctionSpec", into = "TestFunctionSpec")]
pub struct TestFunction {
    center: PlanePoint,
    scale: f64,
    profile: BumpProfile,
    amplitude: f64,
    radius: f64,
    derivative_norms: [f64; 5],
    laplacian_norm: f64,
    gradient_l2: f64,
}

impl From<TestFunctionSpec> for TestFunction {
    fn from(s: TestFunctionSpec) -> Self {
        TestFunction::new(s.center, s.scale, s.profile, s.amplitude)
    }
}

impl From<TestFunction> for TestFunctionSpec {
    fn from(f: TestFunction) -> Self {
        TestFunctionSpec {
            center: f.center,
            scale: f.scale,
            profile: f.profile,
            amplitude: f.amplitude,
        }
    }
}

impl TestFunction {
    /// Bump at `center` with scale `t` (support radius `t/2`).
    ///
    /// Panics if `scale` is not a positive finite number.
    pub fn new(center: PlanePoint, scale: f64, profile: BumpProfile, amplitude: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "bump scale must be positive");
        let radius = 0.5 * scale;
        let unit = profile.unit_norms();
        let a = amplitude.abs();
        let mut derivative_norms = [0.0; 5];
        for (l, slot) in derivative_norms.iter_mut().enumerate() {
            *slot = a * unit.derivative[l] / ipow(radius, l as u32);
        }
        TestFunction {
            center,
            scale,
            profile,
            amplitude,
            radius,
            derivative_norms,
            laplacian_norm: a * unit.laplacian / (radius * radius),
            gradient_l2: a * unit.gradient_l2,
        }
    }

    pub fn center(&self) -> PlanePoint {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn profile(&self) -> BumpProfile {
        self.profile
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Same bump with a different amplitude.
    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        TestFunction::new(self.center, self.scale, self.profile, amplitude)
    }

    /// `‖∇^l f‖∞` for `l ≤ 4`.
    pub fn derivative_norm(&self, l: usize) -> f64 {
        self.derivative_norms[l]
    }

    pub fn laplacian_norm(&self) -> f64 {
        self.laplacian_norm
    }

    /// `‖∇f‖₂`.
    pub fn gradient_l2(&self) -> f64 {
        self.gradient_l2
    }

    /// `‖f‖_{k,t} = Σ_{l=1}^k t^l ‖∇^l f‖∞`.
    pub fn norm_kt(&self, k: usize) -> f64 {
        (1..=k.min(4))
            .map(|l| ipow(self.scale, l as u32) * self.derivative_norms[l])
            .sum()
    }

    #[inline]
    fn local(&self, z: PlanePoint) -> Option<(f64, f64, f64)> {
        let dx = z.x - self.center.x;
        let dy = z.y - self.center.y;
        let v = (dx * dx + dy * dy) / (self.radius * self.radius);
        (v < 1.0).then_some((dx, dy, v))
    }

    pub fn value(&self, z: PlanePoint) -> f64 {
        match self.local(z) {
            Some((_, _, v)) => self.amplitude * dpoly(self.profile.power(), 0, v),
            None => 0.0,
        }
    }

    pub fn gradient(&self, z: PlanePoint) -> [f64; 2] {
        match self.local(z) {
            Some((dx, dy, v)) => {
                let c = self.amplitude * dpoly(self.profile.power(), 1, v) * 2.0
                    / (self.radius * self.radius);
                [c * dx, c * dy]
            }
            None => [0.0, 0.0],
        }
    }

    pub fn laplacian(&self, z: PlanePoint) -> f64 {
        match self.local(z) {
            Some((_, _, v)) => {
                let p = self.profile.power();
                4.0 * self.amplitude / (self.radius * self.radius)
                    * (v * dpoly(p, 2, v) + dpoly(p, 1, v))
            }
            None => 0.0,
        }
    }

    /// `∇Δf`.
    pub fn laplacian_gradient(&self, z: PlanePoint) -> [f64; 2] {
        match self.local(z) {
            Some((dx, dy, v)) => {
                let p = self.profile.power();
                let r2 = self.radius * self.radius;
                let c = 8.0 * self.amplitude / (r2 * r2)
                    * (2.0 * dpoly(p, 2, v) + v * dpoly(p, 3, v));
                [c * dx, c * dy]
            }
            None => [0.0, 0.0],
        }
    }

    /// `∂̄f = ½(∂x + i∂y) f`.
    pub fn dbar(&self, z: PlanePoint) -> Complex {
        let [gx, gy] = self.gradient(z);
        Complex::new(0.5 * gx, 0.5 * gy)
    }

    /// `∂f = ½(∂x − i∂y) f`.
    pub fn d(&self, z: PlanePoint) -> Complex {
        self.dbar(z).conj()
    }
}
