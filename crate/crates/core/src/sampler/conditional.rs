use super::energy::total_energy;
use super::{Configuration, SamplerError};
use crate::kernel::{Disk, PlanePoint};
use crate::potential::{
    add_external_charges, exclude_disk, restrict_hard_wall, scale_potential, DiscreteCharge, Potential,
};

/// Split into the points in the closed disk and the rest.
pub fn split_by_disk(c: &Configuration, b: Disk) -> (Vec<PlanePoint>, Vec<PlanePoint>) {
    c.points.iter().partition(|z| b.contains(**z))
}

/// Potential seen by the `M = N − |outside|` particles in `B` given the
/// outside ones: `W = (N/M)(V − V_o)` on `B`, `+∞` off it, where
/// `V_o(w) = −(2/N) Σ_k log 1/|w − ẑ_k|`.
pub fn conditional_potential(
    outside: &[PlanePoint],
    b: Disk,
    n: usize,
    p: &Potential,
) -> Result<(usize, Potential), SamplerError> {
    if outside.len() >= n {
        return Err(SamplerError::Argument(format!(
            "{} outside particles leave none of {n} inside",
            outside.len()
        )));
    }
    if let Some(z) = outside.iter().find(|z| b.contains(**z)) {
        return Err(SamplerError::Argument(format!("outside particle {z:?} lies in the disk")));
    }
    let m = n - outside.len();
    let ratio = n as f64 / m as f64;
    // (N/M)·(2/N) Σ log 1/|w − ẑ| = (1/M)·2 Σ log 1/|w − ẑ|
    let charges: Vec<DiscreteCharge> = outside.iter().map(|z| DiscreteCharge::new(*z, 1.0)).collect();
    let w = add_external_charges(scale_potential(p.clone(), ratio)?, &charges, 1.0 / m as f64)?;
    Ok((m, restrict_hard_wall(w, b)?))
}

/// `H_N` of the full configuration against `H(z̃|ẑ) + Ĥ(ẑ)`: the inside
/// energy with potential `W` at scale `M` plus the outside energy with
/// `U = (N/(N−M))V` (excluded from `B`) at scale `N − M`.
pub fn energy_decomposition_check(c: &Configuration, b: Disk, p: &Potential) -> Result<(f64, f64), SamplerError> {
    let n = c.len();
    let (inside, outside) = split_by_disk(c, b);
    if inside.is_empty() || outside.is_empty() {
        return Err(SamplerError::Argument("both sides of the disk need at least one particle".into()));
    }
    let (m, w) = conditional_potential(&outside, b, n, p)?;
    let k = n - m;
    let u = exclude_disk(scale_potential(p.clone(), n as f64 / k as f64)?, b)?;
    let lhs = total_energy(c, p, n);
    let rhs = total_energy(&Configuration::new(inside), &w, m) + total_energy(&Configuration::new(outside), &u, k);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_quadratic;
    use rand::{Rng, SeedableRng};

    #[test]
    fn empty_outside_is_walled_v() {
        let q = make_quadratic();
        let b = Disk::centered(10.0);
        let (m, w) = conditional_potential(&[], b, 5, &q).unwrap();
        assert_eq!(m, 5);
        let z = PlanePoint::new(0.3, -1.2);
        assert!((w.value(z) - q.value(z)).abs() < 1e-15);
        assert_eq!(w.value(PlanePoint::new(11.0, 0.0)), f64::INFINITY);
    }

    #[test]
    fn one_outside_charge() {
        let q = make_quadratic();
        let (m, w) = conditional_potential(&[PlanePoint::new(2.0, 0.0)], Disk::centered(1.0), 2, &q).unwrap();
        assert_eq!(m, 1);
        // V_o(0) = −(2/2)·log(1/2) = log 2, W(0) = 2·(0 − log 2)
        let expect = 2.0 * (0.0 - 2f64.ln());
        assert!((w.value(PlanePoint::ORIGIN) - expect).abs() < 1e-15);
        // elsewhere in B: (N/M)(|z|² + (2/N)·log 1/|z − 2|)
        let z = PlanePoint::new(0.3, 0.4);
        let by_hand = 2.0 * (z.norm_sqr() + (2.0 / 2.0) * -(z.dist(PlanePoint::new(2.0, 0.0))).ln());
        assert!((w.value(z) - by_hand).abs() < 1e-14);
        // ΔW on B is (N/M)ΔV
        assert_eq!(w.laplacian(z), 2.0 * 4.0);
    }

    #[test]
    fn argument_errors() {
        let q = make_quadratic();
        let b = Disk::centered(1.0);
        assert!(conditional_potential(&[PlanePoint::new(0.5, 0.0)], b, 3, &q).is_err());
        assert!(conditional_potential(&[PlanePoint::new(2.0, 0.0)], b, 1, &q).is_err());
        let all_in = Configuration::new(vec![PlanePoint::ORIGIN, PlanePoint::new(0.1, 0.0)]);
        assert!(energy_decomposition_check(&all_in, b, &q).is_err());
    }

    #[test]
    fn decomposition_two_particles() {
        let q = make_quadratic();
        let c = Configuration::new(vec![PlanePoint::new(0.2, 0.0), PlanePoint::new(0.0, 0.9)]);
        let (lhs, rhs) = energy_decomposition_check(&c, Disk::centered(0.5), &q).unwrap();
        // closed form: 2 log 1/0.92… + 2(0.04 + 0.81)
        let d = c.points[0].dist(c.points[1]);
        let exact = -2.0 * d.ln() + 2.0 * (0.04 + 0.81);
        assert!((lhs - exact).abs() < 1e-14 && (rhs - exact).abs() < 1e-13);
    }

    #[test]
    fn decomposition_random_and_relabelled() {
        let q = make_quadratic();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let b = Disk::centered(0.5);
        for _ in 0..50 {
            let mut pts: Vec<PlanePoint> = (0..8)
                .map(|_| PlanePoint::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            pts[0] = PlanePoint::new(0.1, 0.1);
            pts[1] = PlanePoint::new(0.9, 0.0);
            let c = Configuration::new(pts.clone());
            let (lhs, rhs) = energy_decomposition_check(&c, b, &q).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs());
            pts.reverse();
            let (l2, r2) = energy_decomposition_check(&Configuration::new(pts), b, &q).unwrap();
            assert!(((lhs - rhs) - (l2 - r2)).abs() < 1e-9 * lhs.abs());
        }
    }
}
