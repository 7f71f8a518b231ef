use serde::{Deserialize, Serialize};

use super::{bump_integral, centered_sum, chain_estimate, count_in_disk, make_bump, ObservableError};
use crate::bump::{BumpProfile, TestFunction};
use crate::equilibrium::EquilibriumMeasure;
use crate::kernel::{Disk, PlanePoint};
use crate::rng;
use crate::sampler::{iid_null_sample, SampleBatch};
use crate::stats::{self, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawFrame {
    pub frame: usize,
    pub count: usize,
    /// `|count − Nμ_V(B)| / Nμ_V(B)`.
    pub relative_deviation: f64,
    /// `|N⁻¹ Σ f(z_j) − ∫ f dμ_V|`.
    pub bump_deviation: f64,
}

/// Counts in `B(z₀, ½N^{−s})` and the bump statistic at the same scale,
/// frame by frame, against the local-law bound
/// `(1 + 1/β) log N · (N^{−1−2s} ‖Δf‖∞ + N^{−½−s} ‖∇f‖₂)` shown with
/// constant 1. The exceedance flag counts frames above ten times that.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalLawReport {
    pub n: usize,
    pub beta: f64,
    pub s: f64,
    pub center: PlanePoint,
    pub radius: f64,
    pub expected_count: f64,
    pub frames: usize,
    pub mean_count: Estimate,
    pub mean_relative_deviation: Estimate,
    pub mean_bump_deviation: Estimate,
    pub max_bump_deviation: f64,
    pub theorem_bound: f64,
    pub exceed_fraction: f64,
    pub rows: Vec<LocalLawFrame>,
}

pub fn local_law_report(
    batch: &SampleBatch,
    eq: &dyn EquilibriumMeasure,
    z0: PlanePoint,
    s: f64,
) -> Result<LocalLawReport, ObservableError> {
    if batch.configs.is_empty() {
        return Err(ObservableError::Argument("empty batch".into()));
    }
    let n = batch.params.n;
    let beta = batch.params.beta;
    let f = make_bump(z0, s, n, BumpProfile::Quartic, 1.0)?;
    let radius = f.support_radius();
    let nf = n as f64;
    let expected = nf * eq.mass_in_disk(Disk::new(z0, radius));
    let integral = bump_integral(&f, eq);
    let bound = (1.0 + 1.0 / beta)
        * nf.ln()
        * (nf.powf(-1.0 - 2.0 * s) * f.laplacian_norm() + nf.powf(-0.5 - s) * f.gradient_l2());
    let rows: Vec<LocalLawFrame> = batch
        .configs
        .iter()
        .enumerate()
        .map(|(frame, c)| {
            let count = count_in_disk(c, z0, radius);
            LocalLawFrame {
                frame,
                count,
                relative_deviation: (count as f64 - expected).abs() / expected,
                bump_deviation: (centered_sum(c, &f, integral) / nf).abs(),
            }
        })
        .collect();
    let col = |g: fn(&LocalLawFrame) -> f64| rows.iter().map(g).collect::<Vec<f64>>();
    let bump = col(|r| r.bump_deviation);
    let exceed = bump.iter().filter(|&&d| d > 10.0 * bound).count();
    Ok(LocalLawReport {
        n,
        beta,
        s,
        center: z0,
        radius,
        expected_count: expected,
        frames: rows.len(),
        mean_count: chain_estimate(&col(|r| r.count as f64)),
        mean_relative_deviation: chain_estimate(&col(|r| r.relative_deviation)),
        mean_bump_deviation: chain_estimate(&bump),
        max_bump_deviation: bump.iter().copied().fold(0.0, f64::max),
        theorem_bound: bound,
        exceed_fraction: exceed as f64 / rows.len() as f64,
        rows,
    })
}

/// A bump family `f_N = make_bump(z₀, s, N, profile, amplitude)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpFamily {
    pub center: PlanePoint,
    pub s: f64,
    pub profile: BumpProfile,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl BumpFamily {
    pub fn at(&self, n: usize) -> Result<TestFunction, ObservableError> {
        make_bump(self.center, self.s, n, self.profile, self.amplitude)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRow {
    pub n: usize,
    pub s: f64,
    pub frames: usize,
    pub var_gas: f64,
    pub var_gas_se: f64,
    /// Sample variance over independent null configurations.
    pub var_null: f64,
    /// `N Var_μ(f)`.
    pub var_null_exact: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationReport {
    pub beta: f64,
    pub rows: Vec<FluctuationRow>,
    /// Least-squares slope of `log Var` against `log N`.
    pub gas_slope: f64,
    pub null_slope: f64,
}

/// `Var(X_f)` under the gas and under the i.i.d. null across `N`.
///
/// Batches sharing an `N` are pooled as replicas. The null column uses
/// `null_draws` configurations per `N` from the `"null/{N}"` stream.
pub fn rigidity_scan(
    batches: &[SampleBatch],
    family: &BumpFamily,
    eq: &dyn EquilibriumMeasure,
    null_draws: usize,
    seed: u64,
) -> Result<FluctuationReport, ObservableError> {
    let mut ns: Vec<usize> = batches.iter().map(|b| b.params.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(ObservableError::Argument(format!("rigidity scan needs at least 3 distinct N, got {}", ns.len())));
    }
    if null_draws < 2 {
        return Err(ObservableError::Argument("at least 2 null draws are needed".into()));
    }
    let beta = batches[0].params.beta;
    if batches.iter().any(|b| b.params.beta != beta || b.configs.len() < 2) {
        return Err(ObservableError::Argument("batches must share β and hold at least 2 frames".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let f = family.at(n)?;
        let integral = bump_integral(&f, eq);
        let support = Disk::new(f.center(), f.support_radius());
        let second = eq.integrate(&|z| f.value(z) * f.value(z), support);
        let xs: Vec<f64> = batches
            .iter()
            .filter(|b| b.params.n == n)
            .flat_map(|b| b.configs.iter().map(|c| centered_sum(c, &f, integral)))
            .collect();
        let m = stats::mean(&xs);
        let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
        let var_gas = stats::variance(&xs);
        let mut r = rng::indexed(seed, "null", n);
        let null: Vec<f64> = (0..null_draws).map(|_| centered_sum(&iid_null_sample(eq, n, &mut r), &f, integral)).collect();
        let var_null = stats::variance(&null);
        rows.push(FluctuationRow {
            n,
            s: family.s,
            frames: xs.len(),
            var_gas,
            var_gas_se: chain_estimate(&sq).se,
            var_null,
            var_null_exact: n as f64 * (second - integral * integral),
            ratio: var_gas / var_null,
        });
    }
    let logn: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let slope = |g: fn(&FluctuationRow) -> f64| stats::linear_fit(&logn, &rows.iter().map(|r| g(r).ln()).collect::<Vec<_>>()).0;
    Ok(FluctuationReport { beta, gas_slope: slope(|r| r.var_gas), null_slope: slope(|r| r.var_null), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium_radial;
    use crate::potential::make_quadratic;
    use crate::sampler::{run_chain, Algorithm, ChainConfig, GasParams, Init};

    fn batch(n: usize, seed: u64) -> SampleBatch {
        let eq = solve_equilibrium_radial(&make_quadratic()).unwrap();
        let params = GasParams::new(n, 1.0, make_quadratic()).unwrap();
        run_chain(&params, &ChainConfig::new(Algorithm::RandomWalk, 600, 100, 5, seed), Init::EquilibriumIid(&eq)).unwrap()
    }

    #[test]
    fn report_shapes() {
        let eq = solve_equilibrium_radial(&make_quadratic()).unwrap();
        let b = batch(16, 1);
        let rep = local_law_report(&b, &eq, PlanePoint::ORIGIN, 0.25).unwrap();
        assert_eq!(rep.frames, 100);
        assert_eq!(rep.rows.len(), 100);
        assert!((rep.radius - 0.25).abs() < 1e-15);
        assert!((rep.expected_count - 16.0 * 0.0625).abs() < 1e-10);
        assert!(rep.theorem_bound > 0.0 && (0.0..=1.0).contains(&rep.exceed_fraction));
    }

    #[test]
    fn scan_needs_three_sizes_and_scales_quadratically() {
        let eq = solve_equilibrium_radial(&make_quadratic()).unwrap();
        let fam = BumpFamily { center: PlanePoint::ORIGIN, s: 0.0, profile: BumpProfile::Quartic, amplitude: 1.0 };
        let two = [batch(8, 1), batch(12, 2)];
        assert!(rigidity_scan(&two, &fam, &eq, 100, 0).is_err());
        let three = [batch(8, 1), batch(12, 2), batch(16, 3)];
        let a = rigidity_scan(&three, &fam, &eq, 200, 0).unwrap();
        let b = rigidity_scan(&three, &BumpFamily { amplitude: 3.0, ..fam }, &eq, 200, 0).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((y.var_gas / x.var_gas - 9.0).abs() < 1e-9);
            assert!((y.var_null / x.var_null - 9.0).abs() < 1e-9);
            assert!(x.var_gas >= 0.0 && x.var_null >= 0.0);
        }
    }
}
