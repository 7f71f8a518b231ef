use super::{Configuration, SamplerError};
use crate::kernel::PlanePoint;
use crate::potential::Potential;

/// `H = Σ_{j≠k} log 1/|z_j − z_k| + n_scale Σ_j V(z_j)`.
///
/// Ordered pairs, so each unordered pair contributes twice. Coincident
/// points or a point where `V = +∞` give `+∞`.
pub fn total_energy(c: &Configuration, p: &Potential, n_scale: usize) -> f64 {
    let pts = &c.points;
    let mut pair = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d2 = pts[i].dist_sqr(pts[j]);
            if d2 == 0.0 {
                return f64::INFINITY;
            }
            // 2 log 1/|z| = −log |z|²
            pair -= d2.ln();
        }
    }
    let mut v = 0.0;
    for z in pts {
        let x = p.value(*z);
        if x == f64::INFINITY {
            return f64::INFINITY;
        }
        v += x;
    }
    pair + n_scale as f64 * v
}

/// `Σ_{k≠j} log(|old − z_k|² / |new − z_k|²)`, using blocked products so
/// that most particles cost one division instead of one logarithm.
fn interaction_delta(pts: &[PlanePoint], j: usize, old: PlanePoint, new: PlanePoint) -> f64 {
    const BLOCK: usize = 8;
    let mut acc = 0.0;
    let mut prod = 1.0;
    let mut count = 0;
    for (k, z) in pts.iter().enumerate() {
        if k == j {
            continue;
        }
        let dn = new.dist_sqr(*z);
        if dn == 0.0 {
            return f64::INFINITY;
        }
        let r = old.dist_sqr(*z) / dn;
        let next = prod * r;
        if next.is_normal() && (1e-150..1e150).contains(&next) {
            prod = next;
            count += 1;
            if count == BLOCK {
                acc += prod.ln();
                prod = 1.0;
                count = 0;
            }
        } else {
            acc += prod.ln() + r.ln();
            prod = 1.0;
            count = 0;
        }
    }
    acc + prod.ln()
}

/// `H(after) − H(before)` when particle `j` moves to `new_point`, in O(N).
pub fn energy_delta_move(c: &Configuration, j: usize, new_point: PlanePoint, p: &Potential, n_scale: usize) -> f64 {
    let old = c.points[j];
    if new_point == old {
        return 0.0;
    }
    let v_new = p.value(new_point);
    if v_new == f64::INFINITY {
        return f64::INFINITY;
    }
    let dv = v_new - p.value(old);
    interaction_delta(&c.points, j, old, new_point) + n_scale as f64 * dv
}

/// `∇_{z_j} H` with particle `j` placed at `z` (the rest as in `c`).
pub fn site_gradient(c: &Configuration, j: usize, z: PlanePoint, p: &Potential, n_scale: usize) -> Result<[f64; 2], SamplerError> {
    let mut gx = 0.0;
    let mut gy = 0.0;
    for (k, w) in c.points.iter().enumerate() {
        if k == j {
            continue;
        }
        let dx = z.x - w.x;
        let dy = z.y - w.y;
        let d2 = dx * dx + dy * dy;
        if d2 == 0.0 {
            return Err(SamplerError::Coincident(j.min(k), j.max(k)));
        }
        gx -= 2.0 * dx / d2;
        gy -= 2.0 * dy / d2;
    }
    let gv = p.gradient(z)?;
    let s = n_scale as f64;
    Ok([gx + s * gv[0], gy + s * gv[1]])
}

/// `∇_{z_j} H = −2 Σ_{k≠j} (z_j − z_k)/|z_j − z_k|² + n_scale ∇V(z_j)` for all `j`.
pub fn grad_energy(c: &Configuration, p: &Potential, n_scale: usize) -> Result<Vec<[f64; 2]>, SamplerError> {
    (0..c.len()).map(|j| site_gradient(c, j, c.points[j], p, n_scale)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Disk;
    use crate::potential::{make_quadratic, restrict_hard_wall};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn cfg(pts: &[(f64, f64)]) -> Configuration {
        Configuration::new(pts.iter().map(|&(x, y)| PlanePoint::new(x, y)).collect())
    }

    #[test]
    fn small_energies() {
        let q = make_quadratic();
        assert_eq!(total_energy(&cfg(&[(0.0, 0.0), (1.0, 0.0)]), &q, 2), 2.0);
        assert_eq!(total_energy(&cfg(&[(0.3, 0.4)]), &q, 5), 5.0 * 0.25);
        assert_eq!(total_energy(&cfg(&[(0.3, 0.4), (0.3, 0.4)]), &q, 2), f64::INFINITY);
        // two particles at distance 2: 2 log(1/2) + N(V1 + V2)
        let e = total_energy(&cfg(&[(-1.0, 0.0), (1.0, 0.0)]), &q, 2);
        assert!((e - (-2.0 * 2f64.ln() + 4.0)).abs() < 1e-15);
    }

    #[test]
    fn delta_edge_cases() {
        let q = make_quadratic();
        let c = cfg(&[(0.0, 0.0), (0.5, 0.1), (-0.2, 0.3)]);
        assert_eq!(energy_delta_move(&c, 1, c.points[1], &q, 3), 0.0);
        assert_eq!(energy_delta_move(&c, 1, c.points[2], &q, 3), f64::INFINITY);
        let walled = restrict_hard_wall(q, Disk::centered(1.0)).unwrap();
        assert_eq!(energy_delta_move(&c, 0, PlanePoint::new(1.5, 0.0), &walled, 3), f64::INFINITY);
    }

    #[test]
    fn delta_matches_recompute_n16() {
        let q = make_quadratic();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = Configuration::new(
                (0..16).map(|_| PlanePoint::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
            );
            let j = rng.random_range(0..16);
            let new = PlanePoint::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let mut after = c.clone();
            after.points[j] = new;
            let full = total_energy(&after, &q, 16) - total_energy(&c, &q, 16);
            let fast = energy_delta_move(&c, j, new, &q, 16);
            let scale = total_energy(&c, &q, 16).abs().max(1.0);
            assert!((full - fast).abs() <= 1e-10 * scale, "{full} vs {fast}");
        }
    }

    #[test]
    fn gradient_symmetry_and_single_particle() {
        let q = make_quadratic();
        let c = cfg(&[(-0.5, 0.0), (0.5, 0.0)]);
        let g = grad_energy(&c, &q, 2).unwrap();
        // interaction part: subtract the confinement 2·∇V
        let i0 = [g[0][0] - 2.0 * (-1.0), g[0][1]];
        let i1 = [g[1][0] - 2.0 * 1.0, g[1][1]];
        assert!((i0[0] + i1[0]).abs() < 1e-15 && (i0[1] + i1[1]).abs() < 1e-15);
        assert!((i0[0] - 2.0).abs() < 1e-15); // −2(−1)/1
        let one = grad_energy(&cfg(&[(0.3, -0.2)]), &q, 7).unwrap();
        assert_eq!(one[0], [7.0 * 0.6, 7.0 * -0.4]);
        assert!(matches!(grad_energy(&cfg(&[(0.1, 0.1), (0.1, 0.1)]), &q, 2), Err(SamplerError::Coincident(0, 1))));
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(seed in 0u64..1000) {
            let q = make_quadratic();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let c = Configuration::new(
                (0..n).map(|_| PlanePoint::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
            );
            let dir: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let g = grad_energy(&c, &q, n).unwrap();
            let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
            let shifted = |t: f64| {
                Configuration::new(c.points.iter().zip(&dir).map(|(z, d)| PlanePoint::new(z.x + t * d[0], z.y + t * d[1])).collect())
            };
            let h = 1e-6;
            let fd = (total_energy(&shifted(h), &q, n) - total_energy(&shifted(-h), &q, n)) / (2.0 * h);
            prop_assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1.0), "{} vs {}", fd, analytic);
        }
    }
}
