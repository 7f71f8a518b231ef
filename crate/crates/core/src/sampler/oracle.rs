use rand::RngCore;
use rand_distr::{Distribution, Gamma};

use super::Configuration;
use crate::equilibrium::EquilibriumMeasure;
use crate::stats::gamma_cdf;

/// Sorted moduli of the β = 1 quadratic gas: `{N|z_i|²}` has the law of
/// independent `Γ(k, 1)`, `k = 1, …, N`.
pub fn ginibre_radii_sample(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut r: Vec<f64> = (1..=n)
        .map(|k| {
            let g = Gamma::new(k as f64, 1.0).expect("positive shape");
            (g.sample(rng) / n as f64).sqrt()
        })
        .collect();
    r.sort_by(f64::total_cmp);
    r
}

/// Mean and variance of the number of particles in `B(0, r)` for the
/// β = 1 quadratic gas: a sum of independent Bernoulli(`P(Γ_k ≤ N r²)`).
pub fn kostlan_count_moments(n: usize, r: f64) -> (f64, f64) {
    let t = n as f64 * r * r;
    (1..=n).fold((0.0, 0.0), |(m, v), k| {
        let p = gamma_cdf(k as f64, t);
        (m + p, v + p * (1.0 - p))
    })
}

/// Law of the number of particles in `B(0, r)` for the β = 1 quadratic
/// gas (Poisson-binomial over the gamma probabilities), indexed by count.
pub fn kostlan_count_pmf(n: usize, r: f64) -> Vec<f64> {
    let t = n as f64 * r * r;
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 1.0;
    for k in 1..=n {
        let p = gamma_cdf(k as f64, t);
        for m in (0..=k).rev() {
            let stay = pmf[m] * (1.0 - p);
            let come = if m > 0 { pmf[m - 1] * p } else { 0.0 };
            pmf[m] = stay + come;
        }
    }
    pmf
}

/// `N` independent draws from the equilibrium measure.
pub fn iid_null_sample(eq: &dyn EquilibriumMeasure, n: usize, rng: &mut dyn RngCore) -> Configuration {
    Configuration::new((0..n).map(|_| eq.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium_radial;
    use crate::kernel::Disk;
    use crate::potential::make_quadratic;
    use crate::{rng, stats};

    #[test]
    fn one_particle_law() {
        let mut r = rng::stream(1, "kostlan/1");
        let xs: Vec<f64> = (0..100_000).map(|_| ginibre_radii_sample(1, &mut r)[0].powi(2)).collect();
        let ks = stats::ks_statistic(&xs, |t| 1.0 - (-t).exp());
        // 99% Kolmogorov band: 1.628/√n
        assert!(ks < 1.628 / (xs.len() as f64).sqrt(), "{ks}");
    }

    #[test]
    fn sorted_and_mean_square() {
        let n = 10;
        let mut r = rng::stream(2, "kostlan/10");
        let sums: Vec<f64> = (0..20_000)
            .map(|_| {
                let s = ginibre_radii_sample(n, &mut r);
                assert!(s.windows(2).all(|w| w[0] <= w[1]));
                s.iter().map(|x| x * x).sum()
            })
            .collect();
        let est = stats::iid_estimate(&sums);
        assert!(est.z_against((n as f64 + 1.0) / 2.0) < 3.0, "{est:?}");
    }

    #[test]
    fn count_moments_limits() {
        let (m, v) = kostlan_count_moments(5, 100.0);
        assert!((m - 5.0).abs() < 1e-12 && v < 1e-12);
        let (m, _) = kostlan_count_moments(64, 0.5);
        // roughly N/4 in the bulk
        assert!((m - 16.0).abs() < 1.0, "{m}");
    }

    #[test]
    fn count_pmf_moments() {
        let pmf = kostlan_count_pmf(20, 0.6);
        let (m, v) = kostlan_count_moments(20, 0.6);
        let total: f64 = pmf.iter().sum();
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let var: f64 = pmf.iter().enumerate().map(|(k, p)| (k as f64 - mean).powi(2) * p).sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!((mean - m).abs() < 1e-12 && (var - v).abs() < 1e-12);
    }

    #[test]
    fn iid_null_is_binomial() {
        let eq = solve_equilibrium_radial(&make_quadratic()).unwrap();
        let n = 40;
        let mut r = rng::stream(3, "null/0");
        let b = Disk::centered(0.5);
        let counts: Vec<f64> = (0..5000)
            .map(|_| {
                let c = iid_null_sample(&eq, n, &mut r);
                assert!(c.points.iter().all(|z| z.norm() <= 1.0 + 1e-12));
                c.points.iter().filter(|z| b.contains(**z)).count() as f64
            })
            .collect();
        let est = stats::iid_estimate(&counts);
        assert!(est.z_against(0.25 * n as f64) < 3.0, "{est:?}");
        let var = stats::variance(&counts);
        let expect = n as f64 * 0.25 * 0.75;
        // sample variance of 5000 draws: relative s.e. ≈ √(2/5000)
        assert!((var / expect - 1.0).abs() < 3.0 * (2.0 / 5000f64).sqrt() * 1.2, "{var} vs {expect}");
    }
}
