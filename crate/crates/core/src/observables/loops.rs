use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{chain_estimate, ObservableError};
use crate::bump::TestFunction;
use crate::kernel::{Complex, PlanePoint};
use crate::potential::Potential;
use crate::sampler::SampleBatch;

/// A complex test function `h` with its Wirtinger derivative `∂h`.
pub trait LoopFunction: Sync {
    fn h(&self, z: PlanePoint) -> Complex;
    fn dh(&self, z: PlanePoint) -> Complex;
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantH(pub Complex);

impl LoopFunction for ConstantH {
    fn h(&self, _: PlanePoint) -> Complex {
        self.0
    }

    fn dh(&self, _: PlanePoint) -> Complex {
        Complex::default()
    }
}

/// `h(z) = z`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityH;

impl LoopFunction for IdentityH {
    fn h(&self, z: PlanePoint) -> Complex {
        z.to_complex()
    }

    fn dh(&self, _: PlanePoint) -> Complex {
        Complex::new(1.0, 0.0)
    }
}

/// `h*(z) = conj h(z̄)`, whose derivative is `conj (∂h)(z̄)`.
#[derive(Debug, Clone, Copy)]
pub struct ReflectedH<H>(pub H);

impl<H: LoopFunction> LoopFunction for ReflectedH<H> {
    fn h(&self, z: PlanePoint) -> Complex {
        self.0.h(PlanePoint::new(z.x, -z.y)).conj()
    }

    fn dh(&self, z: PlanePoint) -> Complex {
        self.0.dh(PlanePoint::new(z.x, -z.y)).conj()
    }
}

/// `h = 4∂̄f/ΔV` for a bump `f`.
#[derive(Debug, Clone)]
pub struct TestH {
    f: TestFunction,
    p: Potential,
}

impl TestH {
    pub fn bump(&self) -> &TestFunction {
        &self.f
    }
}

impl LoopFunction for TestH {
    fn h(&self, z: PlanePoint) -> Complex {
        if self.f.value(z) == 0.0 && self.f.gradient(z) == [0.0, 0.0] {
            return Complex::default();
        }
        self.f.dbar(z).scale(4.0 / self.p.laplacian(z))
    }

    /// `∂h = Δf/ΔV − 4∂̄f ∂(ΔV)/ΔV²`.
    fn dh(&self, z: PlanePoint) -> Complex {
        let lf = self.f.laplacian(z);
        let db = self.f.dbar(z);
        if lf == 0.0 && db == Complex::default() {
            return Complex::default();
        }
        let lv = self.p.laplacian(z);
        let [gx, gy] = self.p.laplacian_gradient(z);
        let d_lv = Complex::new(0.5 * gx, -0.5 * gy);
        Complex::new(lf / lv, 0.0) - (db * d_lv).scale(4.0 / (lv * lv))
    }
}

/// `h = 4∂̄f/ΔV`. `ΔV` is checked positive on a polar stencil covering the
/// bump's support, plus the origin when the support contains it.
pub fn build_h(f: &TestFunction, p: &Potential) -> Result<TestH, ObservableError> {
    let c = f.center();
    let r = f.support_radius();
    let check = |z: PlanePoint| {
        let v = p.laplacian(z);
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ObservableError::DegenerateLaplacian { at: z, value: v })
        }
    };
    check(c)?;
    // radial Laplacians are extremal at the origin
    let d = c.norm();
    if d < r {
        check(PlanePoint::ORIGIN)?;
    }
    for i in 1..=24 {
        let rho = r * i as f64 / 24.0;
        for k in 0..48 {
            let th = TAU * k as f64 / 48.0;
            check(PlanePoint::new(c.x + rho * th.cos(), c.y + rho * th.sin()))?;
        }
    }
    Ok(TestH { f: f.clone(), p: p.clone() })
}

/// Frame averages of the three terms of the loop bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopTerms {
    /// `½ Σ_{j≠k} (h(z_j) − h(z_k))/(z_j − z_k)`.
    pub pair: Complex,
    /// `β⁻¹ Σ ∂h(z_j)`.
    pub dh: Complex,
    /// `N Σ h(z_j) ∂V(z_j)`.
    pub potential: Complex,
}

/// Monte Carlo mean of the loop bracket `pair + dh − potential`, whose
/// expectation under the Gibbs measure vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub estimate: Complex,
    /// `√(se_re² + se_im²)`.
    pub std_error: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub sample_count: usize,
    /// Frames dropped for coincident points.
    pub skipped: usize,
    pub terms: LoopTerms,
}

impl LoopReport {
    /// `|estimate| / std_error`, or 0 for an exactly vanishing estimate.
    pub fn z_score(&self) -> f64 {
        let a = self.estimate.abs();
        if a == 0.0 {
            0.0
        } else {
            a / self.std_error
        }
    }
}

pub fn loop_residual(
    batch: &SampleBatch,
    h: &dyn LoopFunction,
    p: &Potential,
    beta: f64,
) -> Result<LoopReport, ObservableError> {
    if (beta - batch.params.beta).abs() > 1e-12 * beta.abs() {
        return Err(ObservableError::Argument(format!("β = {beta} does not match the batch's {}", batch.params.beta)));
    }
    let mut pair_s = Vec::new();
    let mut dh_s = Vec::new();
    let mut v_s = Vec::new();
    let mut skipped = 0;
    'frames: for c in &batch.configs {
        let n = c.len();
        let hs: Vec<Complex> = c.points.iter().map(|z| h.h(*z)).collect();
        if let Some(j) = hs.iter().position(|v| !v.is_finite()) {
            return Err(ObservableError::Argument(format!("h is not finite at {:?}", c.points[j])));
        }
        let mut pair = Complex::default();
        for j in 0..n {
            let zj = c.points[j].to_complex();
            for k in (j + 1)..n {
                let dz = zj - c.points[k].to_complex();
                if dz == Complex::default() {
                    skipped += 1;
                    continue 'frames;
                }
                pair += (hs[j] - hs[k]) / dz;
            }
        }
        let mut dh = Complex::default();
        let mut v = Complex::default();
        for (z, hz) in c.points.iter().zip(&hs) {
            dh += h.dh(*z);
            v += *hz * p.d(*z)?;
        }
        pair_s.push(pair);
        dh_s.push(dh.scale(1.0 / beta));
        v_s.push(v.scale(n as f64));
    }
    let m = pair_s.len();
    if m < 2 {
        return Err(ObservableError::Argument("fewer than 2 usable frames".into()));
    }
    let bracket: Vec<Complex> = (0..m).map(|i| pair_s[i] + dh_s[i] - v_s[i]).collect();
    let re = chain_estimate(&bracket.iter().map(|b| b.re).collect::<Vec<_>>());
    let im = chain_estimate(&bracket.iter().map(|b| b.im).collect::<Vec<_>>());
    let avg = |xs: &[Complex]| {
        let mut s = Complex::default();
        xs.iter().for_each(|x| s += *x);
        s.scale(1.0 / xs.len() as f64)
    };
    Ok(LoopReport {
        estimate: Complex::new(re.mean, im.mean),
        std_error: re.se.hypot(im.se),
        se_re: re.se,
        se_im: im.se,
        sample_count: m,
        skipped,
        terms: LoopTerms { pair: avg(&pair_s), dh: avg(&dh_s), potential: avg(&v_s) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::BumpProfile;
    use crate::potential::{make_quadratic, make_radial};
    use crate::sampler::{Algorithm, ChainConfig, Configuration, GasParams};

    fn bump() -> TestFunction {
        TestFunction::new(PlanePoint::new(0.2, -0.1), 0.8, BumpProfile::Quintic, 1.0)
    }

    #[test]
    fn quadratic_h_is_dbar_f() {
        let f = bump();
        let h = build_h(&f, &make_quadratic()).unwrap();
        for z in [PlanePoint::new(0.3, 0.0), PlanePoint::new(0.1, -0.3), PlanePoint::new(5.0, 5.0)] {
            let d = h.h(z) - f.dbar(z);
            assert!(d.abs() < 1e-15);
            assert!((f.dbar(z).conj() - f.d(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn dh_matches_central_differences() {
        let f = bump();
        let p = make_radial(&[1.0, 0.5, 0.0, 0.25]).unwrap();
        let h = build_h(&f, &p).unwrap();
        let e = 1e-5;
        for z in [PlanePoint::new(0.35, 0.05), PlanePoint::new(0.0, -0.2), PlanePoint::new(0.2, -0.4)] {
            let hx = (h.h(PlanePoint::new(z.x + e, z.y)) - h.h(PlanePoint::new(z.x - e, z.y))).scale(0.5 / e);
            let hy = (h.h(PlanePoint::new(z.x, z.y + e)) - h.h(PlanePoint::new(z.x, z.y - e))).scale(0.5 / e);
            let fd = Complex::wirtinger_d(hx, hy);
            let an = h.dh(z);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd:?} vs {an:?}");
        }
    }

    #[test]
    fn degenerate_laplacian_is_rejected() {
        // V = |z|⁴ has ΔV = 16|z|², vanishing at the origin
        let p = make_radial(&[0.0, 1.0]).unwrap();
        let f = TestFunction::new(PlanePoint::new(0.1, 0.05), 0.8, BumpProfile::Quintic, 1.0);
        assert!(matches!(build_h(&f, &p), Err(ObservableError::DegenerateLaplacian { .. })));
    }

    #[test]
    fn identity_h_bracket_is_algebraic() {
        let q = make_quadratic();
        let pts = vec![PlanePoint::new(0.1, 0.2), PlanePoint::new(-0.4, 0.3), PlanePoint::new(0.5, -0.6)];
        let c = Configuration::new(pts.clone());
        let batch = SampleBatch {
            params: GasParams::new(3, 2.0, q.clone()).unwrap(),
            chain: ChainConfig::new(Algorithm::RandomWalk, 2, 0, 1, 0),
            configs: vec![c.clone(), c],
            energies: vec![0.0; 2],
            acceptance_rate: 0.5,
            step_size: 0.1,
            warning: None,
        };
        let rep = loop_residual(&batch, &IdentityH, &q, 2.0).unwrap();
        let s: f64 = pts.iter().map(|z| z.norm_sqr()).sum();
        let expect = 0.5 * 3.0 * 2.0 + 3.0 / 2.0 - 3.0 * s;
        assert!((rep.estimate.re - expect).abs() < 1e-13 && rep.estimate.im.abs() < 1e-13);
        assert!(loop_residual(&batch, &IdentityH, &q, 1.0).is_err());
    }
}
