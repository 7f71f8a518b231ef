//! Confining potentials `V` as closed compositional values.
//!
//! A [`Potential`] is built from the quadratic or radial-polynomial families
//! and then transformed by scaling, logarithmic external charges, bump
//! shifts `V − f`, and hard walls. Values, gradients and Laplacians are
//! exact for every composition.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bump::TestFunction;
use crate::kernel::{Disk, PlanePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("invalid potential argument: {0}")]
    Argument(String),
    #[error("potential is infinite at ({x}, {y})")]
    Infinite { x: f64, y: f64 },
    #[error("evaluation at external charge location ({x}, {y})")]
    AtCharge { x: f64, y: f64 },
    #[error("potential cannot be expressed as a config block: {0}")]
    NotDeclarative(String),
}

/// Point charge whose logarithmic potential perturbs a base potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCharge {
    pub location: PlanePoint,
    pub weight: f64,
}

impl DiscreteCharge {
    pub fn new(location: PlanePoint, weight: f64) -> Self {
        Self { location, weight }
    }
}

/// Where a potential is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Region {
    Plane,
    Disk { disk: Disk },
    /// Complement of the closed disk.
    Outside { disk: Disk },
    Intersection { parts: Vec<Region> },
}

impl Region {
    pub fn contains(&self, z: PlanePoint) -> bool {
        match self {
            Region::Plane => true,
            Region::Disk { disk } => disk.contains(z),
            Region::Outside { disk } => !disk.contains(z),
            Region::Intersection { parts } => parts.iter().all(|r| r.contains(z)),
        }
    }

    fn intersect(self, other: Region) -> Region {
        match (self, other) {
            (Region::Plane, r) | (r, Region::Plane) => r,
            (Region::Intersection { mut parts }, r) => {
                parts.push(r);
                Region::Intersection { parts }
            }
            (a, b) => Region::Intersection { parts: vec![a, b] },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `|z|²`.
    Quadratic,
    /// `Σ_k c_k |z|^{2k}`, `k = 1, 2, …`.
    Radial { coefficients: Vec<f64> },
    Scaled { base: Box<Potential>, factor: f64 },
    /// `base + scale · 2 Σ w_i log 1/|z − c_i|`.
    ExternalCharges {
        base: Box<Potential>,
        charges: Vec<DiscreteCharge>,
        scale: f64,
    },
    /// `base − f`.
    BumpShift { base: Box<Potential>, bump: TestFunction },
    /// `base` on the closed disk, `+∞` outside.
    HardWall { base: Box<Potential>, disk: Disk },
    /// `base` outside the closed disk, `+∞` on it.
    Exclusion { base: Box<Potential>, disk: Disk },
}

/// Confining potential with growth metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential {
    kind: PotentialKind,
    growth_margin: f64,
}

/// Radial potentials `V(r) = Σ c_k r^{2k}` in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    coefficients: Vec<f64>,
}

impl RadialProfile {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn value(&self, r: f64) -> f64 {
        let q = r * r;
        let mut acc = 0.0;
        let mut qk = q;
        for &c in &self.coefficients {
            acc += c * qk;
            qk *= q;
        }
        acc
    }

    /// `dV/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        let q = r * r;
        let mut acc = 0.0;
        let mut qk = 1.0;
        for (i, &c) in self.coefficients.iter().enumerate() {
            let k = (i + 1) as f64;
            acc += c * 2.0 * k * qk;
            qk *= q;
        }
        acc * r
    }

    /// `ΔV(r) = V'' + V'/r`.
    pub fn laplacian(&self, r: f64) -> f64 {
        let q = r * r;
        let mut acc = 0.0;
        let mut qk = 1.0;
        for (i, &c) in self.coefficients.iter().enumerate() {
            let k = (i + 1) as f64;
            acc += c * 4.0 * k * k * qk;
            qk *= q;
        }
        acc
    }

    /// `d(ΔV)/dr`.
    pub fn laplacian_derivative(&self, r: f64) -> f64 {
        let q = r * r;
        let mut acc = 0.0;
        let mut qk = 1.0;
        for (i, &c) in self.coefficients.iter().enumerate().skip(1) {
            let k = (i + 1) as f64;
            acc += c * 4.0 * k * k * 2.0 * (k - 1.0) * qk;
            qk *= q;
        }
        acc * r
    }
}

/// Sampled growth-condition report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub epsilon: f64,
    /// `(radius, min over sampled angles of V − (2+ε) log|z|)`.
    pub rows: Vec<(f64, f64)>,
    pub increasing: bool,
}

pub fn make_quadratic() -> Potential {
    Potential { kind: PotentialKind::Quadratic, growth_margin: 1.0 }
}

pub fn make_radial(coefficients: &[f64]) -> Result<Potential, PotentialError> {
    if coefficients.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(PotentialError::Argument(
            "radial coefficients must be finite and nonnegative".into(),
        ));
    }
    if !coefficients.iter().any(|&c| c > 0.0) {
        return Err(PotentialError::Argument(
            "at least one radial coefficient must be positive".into(),
        ));
    }
    Ok(Potential {
        kind: PotentialKind::Radial { coefficients: coefficients.to_vec() },
        growth_margin: 1.0,
    })
}

pub fn add_external_charges(base: Potential, charges: &[DiscreteCharge], scale: f64) -> Result<Potential, PotentialError> {
    for c in charges {
        if !c.location.is_finite() || !(c.weight.is_finite() && c.weight >= 0.0) {
            return Err(PotentialError::Argument(format!(
                "charge must have a finite location and nonnegative weight: {c:?}"
            )));
        }
    }
    if !scale.is_finite() {
        return Err(PotentialError::Argument("charge scale must be finite".into()));
    }
    let growth_margin = base.growth_margin;
    Ok(Potential {
        kind: PotentialKind::ExternalCharges {
            base: Box::new(base),
            charges: charges.to_vec(),
            scale,
        },
        growth_margin,
    })
}

pub fn restrict_hard_wall(base: Potential, disk: Disk) -> Result<Potential, PotentialError> {
    if !(disk.radius > 0.0 && disk.radius.is_finite()) || !disk.center.is_finite() {
        return Err(PotentialError::Argument(format!("wall radius must be positive: {disk:?}")));
    }
    let growth_margin = base.growth_margin;
    Ok(Potential {
        kind: PotentialKind::HardWall { base: Box::new(base), disk },
        growth_margin,
    })
}

/// `base` outside the closed disk and `+∞` on it.
pub fn exclude_disk(base: Potential, disk: Disk) -> Result<Potential, PotentialError> {
    if !(disk.radius > 0.0 && disk.radius.is_finite()) || !disk.center.is_finite() {
        return Err(PotentialError::Argument(format!("disk radius must be positive: {disk:?}")));
    }
    let growth_margin = base.growth_margin;
    Ok(Potential {
        kind: PotentialKind::Exclusion { base: Box::new(base), disk },
        growth_margin,
    })
}

pub fn scale_potential(base: Potential, factor: f64) -> Result<Potential, PotentialError> {
    if !factor.is_finite() {
        return Err(PotentialError::Argument("scale factor must be finite".into()));
    }
    let growth_margin = base.growth_margin;
    Ok(Potential {
        kind: PotentialKind::Scaled { base: Box::new(base), factor },
        growth_margin,
    })
}

/// `V − f`.
pub fn subtract_bump(base: Potential, bump: TestFunction) -> Potential {
    let growth_margin = base.growth_margin;
    Potential {
        kind: PotentialKind::BumpShift { base: Box::new(base), bump },
        growth_margin,
    }
}

pub fn check_growth(p: &Potential, radii: &[f64]) -> Result<GrowthReport, PotentialError> {
    if radii.iter().any(|&r| r <= 1.0) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PotentialError::Argument(
            "growth radii must be increasing and greater than 1".into(),
        ));
    }
    let eps = p.growth_margin;
    let angles = 64;
    let rows: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let min = (0..angles)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / angles as f64;
                    let z = PlanePoint::new(r * th.cos(), r * th.sin());
                    p.value(z) - (2.0 + eps) * r.ln()
                })
                .fold(f64::INFINITY, f64::min);
            (r, min)
        })
        .collect();
    let increasing = rows.windows(2).all(|w| {
        (w[0].1 == f64::INFINITY && w[1].1 == f64::INFINITY) || w[1].1 > w[0].1
    });
    Ok(GrowthReport { epsilon: eps, rows, increasing })
}

impl Potential {
    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn growth_margin(&self) -> f64 {
        self.growth_margin
    }

    pub fn with_growth_margin(mut self, eps: f64) -> Self {
        self.growth_margin = eps;
        self
    }

    pub fn finite_region(&self) -> Region {
        match &self.kind {
            PotentialKind::Quadratic | PotentialKind::Radial { .. } => Region::Plane,
            PotentialKind::Scaled { base, .. }
            | PotentialKind::ExternalCharges { base, .. }
            | PotentialKind::BumpShift { base, .. } => base.finite_region(),
            PotentialKind::HardWall { base, disk } => {
                base.finite_region().intersect(Region::Disk { disk: *disk })
            }
            PotentialKind::Exclusion { base, disk } => {
                base.finite_region().intersect(Region::Outside { disk: *disk })
            }
        }
    }

    /// Closed radial form, when the potential is a nonnegative multiple of a
    /// radial polynomial with no walls or charges.
    pub fn as_radial(&self) -> Option<RadialProfile> {
        match &self.kind {
            PotentialKind::Quadratic => Some(RadialProfile { coefficients: vec![1.0] }),
            PotentialKind::Radial { coefficients } => {
                Some(RadialProfile { coefficients: coefficients.clone() })
            }
            PotentialKind::Scaled { base, factor } if *factor > 0.0 => {
                base.as_radial().map(|r| RadialProfile {
                    coefficients: r.coefficients.iter().map(|c| c * factor).collect(),
                })
            }
            _ => None,
        }
    }

    /// Invariance under `z ↦ z̄`.
    pub fn is_conjugation_symmetric(&self) -> bool {
        let sym = |p: PlanePoint| p.y == 0.0;
        match &self.kind {
            PotentialKind::Quadratic | PotentialKind::Radial { .. } => true,
            PotentialKind::Scaled { base, .. } => base.is_conjugation_symmetric(),
            PotentialKind::ExternalCharges { base, charges, .. } => {
                base.is_conjugation_symmetric() && charges.iter().all(|c| sym(c.location))
            }
            PotentialKind::BumpShift { base, bump } => {
                base.is_conjugation_symmetric() && sym(bump.center())
            }
            PotentialKind::HardWall { base, disk } | PotentialKind::Exclusion { base, disk } => {
                base.is_conjugation_symmetric() && sym(disk.center)
            }
        }
    }

    /// `V(z)`, `+∞` outside the finite region and at charge locations.
    pub fn value(&self, z: PlanePoint) -> f64 {
        match &self.kind {
            PotentialKind::Quadratic => z.norm_sqr(),
            PotentialKind::Radial { coefficients } => {
                let q = z.norm_sqr();
                let mut acc = 0.0;
                let mut qk = q;
                for &c in coefficients {
                    acc += c * qk;
                    qk *= q;
                }
                acc
            }
            PotentialKind::Scaled { base, factor } => {
                let v = base.value(z);
                if v == f64::INFINITY {
                    v
                } else {
                    factor * v
                }
            }
            PotentialKind::ExternalCharges { base, charges, scale } => {
                let v = base.value(z);
                if v == f64::INFINITY {
                    return v;
                }
                let mut acc = 0.0;
                for c in charges {
                    let d2 = z.dist_sqr(c.location);
                    if d2 == 0.0 {
                        if c.weight > 0.0 && *scale != 0.0 {
                            return f64::INFINITY;
                        }
                        continue;
                    }
                    acc -= c.weight * d2.ln();
                }
                v + scale * acc
            }
            PotentialKind::BumpShift { base, bump } => base.value(z) - bump.value(z),
            PotentialKind::HardWall { base, disk } => {
                if disk.contains(z) {
                    base.value(z)
                } else {
                    f64::INFINITY
                }
            }
            PotentialKind::Exclusion { base, disk } => {
                if disk.contains(z) {
                    f64::INFINITY
                } else {
                    base.value(z)
                }
            }
        }
    }

    /// `∇V(z)`.
    pub fn gradient(&self, z: PlanePoint) -> Result<[f64; 2], PotentialError> {
        match &self.kind {
            PotentialKind::Quadratic => Ok([2.0 * z.x, 2.0 * z.y]),
            PotentialKind::Radial { .. } => {
                let prof = self.as_radial().expect("radial kind");
                let r = z.norm();
                if r == 0.0 {
                    return Ok([0.0, 0.0]);
                }
                let d = prof.derivative(r) / r;
                Ok([d * z.x, d * z.y])
            }
            PotentialKind::Scaled { base, factor } => {
                let g = base.gradient(z)?;
                Ok([factor * g[0], factor * g[1]])
            }
            PotentialKind::ExternalCharges { base, charges, scale } => {
                let mut g = base.gradient(z)?;
                for c in charges {
                    let dx = z.x - c.location.x;
                    let dy = z.y - c.location.y;
                    let d2 = dx * dx + dy * dy;
                    if d2 == 0.0 {
                        if c.weight > 0.0 && *scale != 0.0 {
                            return Err(PotentialError::AtCharge { x: z.x, y: z.y });
                        }
                        continue;
                    }
                    // ∇ 2 log 1/|z − c| = −2 (z − c)/|z − c|²
                    let k = -2.0 * scale * c.weight / d2;
                    g[0] += k * dx;
                    g[1] += k * dy;
                }
                Ok(g)
            }
            PotentialKind::BumpShift { base, bump } => {
                let g = base.gradient(z)?;
                let b = bump.gradient(z);
                Ok([g[0] - b[0], g[1] - b[1]])
            }
            PotentialKind::HardWall { base, disk } => {
                if disk.contains(z) {
                    base.gradient(z)
                } else {
                    Err(PotentialError::Infinite { x: z.x, y: z.y })
                }
            }
            PotentialKind::Exclusion { base, disk } => {
                if disk.contains(z) {
                    Err(PotentialError::Infinite { x: z.x, y: z.y })
                } else {
                    base.gradient(z)
                }
            }
        }
    }

    /// Wirtinger derivative `∂V = ½(∂x − i∂y) V`, returned as `(re, im)`.
    pub fn d(&self, z: PlanePoint) -> Result<crate::kernel::Complex, PotentialError> {
        let [gx, gy] = self.gradient(z)?;
        Ok(crate::kernel::Complex::new(0.5 * gx, -0.5 * gy))
    }

    /// `ΔV(z)`: the absolutely continuous part. Walls and charge poles do not
    /// contribute.
    pub fn laplacian(&self, z: PlanePoint) -> f64 {
        match &self.kind {
            PotentialKind::Quadratic => 4.0,
            PotentialKind::Radial { .. } => self.as_radial().expect("radial kind").laplacian(z.norm()),
            PotentialKind::Scaled { base, factor } => factor * base.laplacian(z),
            PotentialKind::ExternalCharges { base, .. } => base.laplacian(z),
            PotentialKind::BumpShift { base, bump } => base.laplacian(z) - bump.laplacian(z),
            PotentialKind::HardWall { base, .. } | PotentialKind::Exclusion { base, .. } => {
                base.laplacian(z)
            }
        }
    }

    /// `∇ΔV(z)`.
    pub fn laplacian_gradient(&self, z: PlanePoint) -> [f64; 2] {
        match &self.kind {
            PotentialKind::Quadratic => [0.0, 0.0],
            PotentialKind::Radial { .. } => {
                let r = z.norm();
                if r == 0.0 {
                    return [0.0, 0.0];
                }
                let d = self.as_radial().expect("radial kind").laplacian_derivative(r) / r;
                [d * z.x, d * z.y]
            }
            PotentialKind::Scaled { base, factor } => {
                let g = base.laplacian_gradient(z);
                [factor * g[0], factor * g[1]]
            }
            PotentialKind::ExternalCharges { base, .. } => base.laplacian_gradient(z),
            PotentialKind::BumpShift { base, bump } => {
                let g = base.laplacian_gradient(z);
                let b = bump.laplacian_gradient(z);
                [g[0] - b[0], g[1] - b[1]]
            }
            PotentialKind::HardWall { base, .. } | PotentialKind::Exclusion { base, .. } => {
                base.laplacian_gradient(z)
            }
        }
    }

    pub fn to_spec(&self) -> Result<PotentialSpec, PotentialError> {
        let mut spec = PotentialSpec {
            growth_margin: Some(self.growth_margin),
            ..PotentialSpec::default()
        };
        let mut cur = self;
        loop {
            match &cur.kind {
                PotentialKind::HardWall { base, disk } if spec.wall.is_none() && spec.charges.is_empty() => {
                    spec.wall = Some(WallSpec { x: disk.center.x, y: disk.center.y, radius: disk.radius });
                    cur = base;
                }
                PotentialKind::ExternalCharges { base, charges, scale } if spec.charges.is_empty() => {
                    spec.charges = charges
                        .iter()
                        .map(|c| ChargeSpec { x: c.location.x, y: c.location.y, weight: c.weight })
                        .collect();
                    spec.charge_scale = Some(*scale);
                    cur = base;
                }
                PotentialKind::Quadratic => {
                    spec.kind = PotentialFamily::Quadratic;
                    return Ok(spec);
                }
                PotentialKind::Radial { coefficients } => {
                    spec.kind = PotentialFamily::Radial;
                    spec.coefficients = Some(coefficients.clone());
                    return Ok(spec);
                }
                other => {
                    return Err(PotentialError::NotDeclarative(format!("{other:?}").chars().take(80).collect()));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialFamily {
    #[default]
    Quadratic,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeSpec {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// Declarative potential block.
///
/// ```toml
/// [potential]
/// kind = "radial"            # "quadratic" | "radial"
/// coefficients = [1.0, 0.5]  # radial only: V = Σ c_k |z|^{2k}
/// charges = [{ x = 2.0, y = 0.0, weight = 1.0 }]
/// charge_scale = 1.0         # adds charge_scale · 2 Σ w log 1/|z − c|
/// wall = { x = 0.0, y = 0.0, radius = 1.5 }
/// growth_margin = 1.0
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charges: Vec<ChargeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_margin: Option<f64>,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential, PotentialError> {
        let mut p = match self.kind {
            PotentialFamily::Quadratic => {
                if self.coefficients.is_some() {
                    return Err(PotentialError::Argument(
                        "`coefficients` is only valid for kind = \"radial\"".into(),
                    ));
                }
                make_quadratic()
            }
            PotentialFamily::Radial => {
                let c = self.coefficients.as_ref().ok_or_else(|| {
                    PotentialError::Argument("kind = \"radial\" requires `coefficients`".into())
                })?;
                make_radial(c)?
            }
        };
        if let Some(eps) = self.growth_margin {
            if !(eps > 0.0) {
                return Err(PotentialError::Argument("growth_margin must be positive".into()));
            }
            p = p.with_growth_margin(eps);
        }
        if !self.charges.is_empty() {
            let charges: Vec<DiscreteCharge> = self
                .charges
                .iter()
                .map(|c| DiscreteCharge::new(PlanePoint::new(c.x, c.y), c.weight))
                .collect();
            p = add_external_charges(p, &charges, self.charge_scale.unwrap_or(1.0))?;
        } else if self.charge_scale.is_some() {
            return Err(PotentialError::Argument("`charge_scale` given without `charges`".into()));
        }
        if let Some(w) = self.wall {
            p = restrict_hard_wall(p, Disk::new(PlanePoint::new(w.x, w.y), w.radius))?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::BumpProfile;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn quadratic_values() {
        let p = make_quadratic();
        assert_eq!(p.value(PlanePoint::new(1.0, 0.0)), 1.0);
        assert_eq!(p.laplacian(PlanePoint::new(0.3, 7.0)), 4.0);
        let g = p.gradient(PlanePoint::new(0.3, -0.4)).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] + 0.8).abs() < 1e-15);
        assert_eq!(p.finite_region(), Region::Plane);
    }

    #[test]
    fn radial_values() {
        let quart = make_radial(&[0.0, 1.0]).unwrap();
        for r in [0.1, 0.5, 1.3] {
            let z = PlanePoint::new(r * 0.6, r * 0.8);
            assert!((quart.laplacian(z) - 16.0 * r * r).abs() < 1e-12);
        }
        let both = make_radial(&[1.0, 1.0]).unwrap();
        assert_eq!(both.value(PlanePoint::new(1.0, 0.0)), 2.0);
        assert!(make_radial(&[0.0, 0.0]).is_err());
        assert!(make_radial(&[]).is_err());
        assert!(make_radial(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn radial_unit_matches_quadratic() {
        let a = make_radial(&[1.0]).unwrap();
        let b = make_quadratic();
        for k in 0..50 {
            let z = PlanePoint::new((k as f64 * 0.37).sin() * 2.0, (k as f64 * 0.91).cos());
            assert!((a.value(z) - b.value(z)).abs() < 1e-14);
            let (ga, gb) = (a.gradient(z).unwrap(), b.gradient(z).unwrap());
            assert!((ga[0] - gb[0]).abs() < 1e-13 && (ga[1] - gb[1]).abs() < 1e-13);
            assert!((a.laplacian(z) - b.laplacian(z)).abs() < 1e-13);
        }
    }

    #[test]
    fn external_charges() {
        let base = make_quadratic();
        let same = add_external_charges(base.clone(), &[], 1.0).unwrap();
        let z = PlanePoint::new(0.4, -0.2);
        assert_eq!(same.value(z), base.value(z));

        let c = DiscreteCharge::new(PlanePoint::new(2.0, 0.0), 1.0);
        let p = add_external_charges(base.clone(), &[c], 1.0).unwrap();
        assert!((p.value(PlanePoint::ORIGIN) - (-2.0 * LN2)).abs() < 1e-14);
        assert_eq!(p.laplacian(PlanePoint::ORIGIN), base.laplacian(PlanePoint::ORIGIN));
        assert_eq!(p.value(c.location), f64::INFINITY);
        assert!(matches!(p.gradient(c.location), Err(PotentialError::AtCharge { .. })));
        assert!(add_external_charges(base, &[DiscreteCharge::new(PlanePoint::ORIGIN, -1.0)], 1.0).is_err());
    }

    #[test]
    fn hard_wall() {
        let base = make_quadratic();
        let disk = Disk::centered(1.0);
        let p = restrict_hard_wall(base.clone(), disk).unwrap();
        let inside = PlanePoint::new(0.3, 0.4);
        assert_eq!(p.value(inside), base.value(inside));
        assert_eq!(p.value(PlanePoint::new(1.1, 0.0)), f64::INFINITY);
        assert_eq!(p.gradient(inside).unwrap(), base.gradient(inside).unwrap());
        assert!(p.gradient(PlanePoint::new(2.0, 0.0)).is_err());
        assert_eq!(p.finite_region(), Region::Disk { disk });
        assert!(restrict_hard_wall(make_quadratic(), Disk::centered(0.0)).is_err());

        let ex = exclude_disk(make_quadratic(), disk).unwrap();
        assert_eq!(ex.value(inside), f64::INFINITY);
        assert_eq!(ex.value(PlanePoint::new(1.5, 0.0)), 2.25);
    }

    #[test]
    fn growth_checks() {
        let q = make_quadratic();
        let rep = check_growth(&q, &[2.0, 5.0, 10.0]).unwrap();
        let last = rep.rows.last().unwrap().1;
        assert!((last - (100.0 - 3.0 * 10f64.ln())).abs() < 1e-9);
        assert!((last - 93.092).abs() < 1e-3);
        assert!(rep.increasing);

        // pure logarithmic decay: V = −2 log|z|
        let zero = scale_potential(make_quadratic(), 0.0).unwrap();
        let bad = add_external_charges(zero, &[DiscreteCharge::new(PlanePoint::ORIGIN, 1.0)], 1.0).unwrap();
        assert!(!check_growth(&bad, &[2.0, 5.0, 10.0]).unwrap().increasing);

        let wall = restrict_hard_wall(make_quadratic(), Disk::centered(1.0)).unwrap();
        assert!(check_growth(&wall, &[2.0, 5.0, 10.0]).unwrap().increasing);

        assert!(check_growth(&q, &[0.5, 2.0]).is_err());
        assert!(check_growth(&q, &[3.0, 2.0]).is_err());
    }

    #[test]
    fn description_round_trip_and_unknown_keys() {
        let text = r#"{"kind":"radial","coefficients":[1.0,0.5],"charges":[{"x":2.0,"y":0.0,"weight":1.0}],"wall":{"x":0.0,"y":0.0,"radius":1.5}}"#;
        let spec: PotentialSpec = serde_json::from_str(text).unwrap();
        let p = spec.build().unwrap();
        let back = p.to_spec().unwrap();
        let q = back.build().unwrap();
        let z = PlanePoint::new(0.2, 0.9);
        assert_eq!(p.value(z), q.value(z));
        assert!(serde_json::from_str::<PotentialSpec>(r#"{"kind":"quadratic","coefs":[1]}"#).is_err());
        let quad_coeffs = PotentialSpec { coefficients: Some(vec![1.0]), ..Default::default() };
        assert!(quad_coeffs.build().is_err());
    }

    fn random_potentials() -> Vec<Potential> {
        let bump = TestFunction::new(PlanePoint::new(0.2, 0.1), 0.8, BumpProfile::Quintic, 0.3);
        let charges = [
            DiscreteCharge::new(PlanePoint::new(2.5, 0.3), 0.7),
            DiscreteCharge::new(PlanePoint::new(-1.0, 2.2), 1.2),
        ];
        vec![
            make_quadratic(),
            make_radial(&[0.5, 0.3, 0.1]).unwrap(),
            scale_potential(make_radial(&[0.0, 1.0]).unwrap(), 1.7).unwrap(),
            add_external_charges(make_quadratic(), &charges, 0.4).unwrap(),
            subtract_bump(make_radial(&[1.0, 0.2]).unwrap(), bump),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn derivatives_match_finite_differences(x in -1.5f64..1.5, y in -1.5f64..1.5) {
            let z = PlanePoint::new(x, y);
            let h = 1e-4;
            for p in random_potentials() {
                let v = |dx: f64, dy: f64| p.value(PlanePoint::new(x + dx, y + dy));
                let g = p.gradient(z).unwrap();
                let gx = (v(h, 0.0) - v(-h, 0.0)) / (2.0 * h);
                let gy = (v(0.0, h) - v(0.0, -h)) / (2.0 * h);
                let vs = 1.0 + v(0.0, 0.0).abs();
                prop_assert!((gx - g[0]).abs() <= 1e-5 * (vs + g[0].abs()));
                prop_assert!((gy - g[1]).abs() <= 1e-5 * (vs + g[1].abs()));
                // Richardson-extrapolated five-point Laplacian
                let fd_lap = |s: f64| (v(s, 0.0) + v(-s, 0.0) + v(0.0, s) + v(0.0, -s) - 4.0 * v(0.0, 0.0)) / (s * s);
                let lap = (4.0 * fd_lap(1e-3) - fd_lap(2e-3)) / 3.0;
                let l = p.laplacian(z);
                prop_assert!((lap - l).abs() <= 1e-5 * (1.0 + l.abs()), "lap fd {} exact {}", lap, l);
                let lv = |dx: f64, dy: f64| p.laplacian(PlanePoint::new(x + dx, y + dy));
                let cd = |s: f64| [(lv(s, 0.0) - lv(-s, 0.0)) / (2.0 * s), (lv(0.0, s) - lv(0.0, -s)) / (2.0 * s)];
                let (c1, c2) = (cd(1e-3), cd(2e-3));
                let lg = p.laplacian_gradient(z);
                for k in 0..2 {
                    let fd = (4.0 * c1[k] - c2[k]) / 3.0;
                    prop_assert!((fd - lg[k]).abs() <= 1e-5 * (1.0 + lg[k].abs() + l.abs()));
                }
            }
        }

        #[test]
        fn charges_are_additive(x in -1.0f64..1.0, y in -1.0f64..1.0, w1 in 0.0f64..2.0, w2 in 0.0f64..2.0) {
            let a = [DiscreteCharge::new(PlanePoint::new(3.0, 0.5), w1)];
            let b = [DiscreteCharge::new(PlanePoint::new(-2.0, -2.0), w2), DiscreteCharge::new(PlanePoint::new(0.0, 4.0), 1.0)];
            let nested = add_external_charges(add_external_charges(make_quadratic(), &a, 0.7).unwrap(), &b, 0.7).unwrap();
            let mut ab = a.to_vec();
            ab.extend_from_slice(&b);
            let flat = add_external_charges(make_quadratic(), &ab, 0.7).unwrap();
            let z = PlanePoint::new(x, y);
            prop_assert!((nested.value(z) - flat.value(z)).abs() < 1e-12);
        }
    }
}
