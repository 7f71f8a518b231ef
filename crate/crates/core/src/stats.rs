//! Small statistics helpers for Monte Carlo output.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Mean with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// `|a − b| / sqrt(se_a² + se_b²)`.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let s = (self.se * self.se + other.se * other.se).sqrt();
        (self.mean - other.mean).abs() / s
    }

    /// `|mean − value| / se`.
    pub fn z_against(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.se
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Mean of i.i.d. values with the naive standard error.
pub fn iid_estimate(xs: &[f64]) -> Estimate {
    Estimate { mean: mean(xs), se: (variance(xs) / xs.len() as f64).sqrt() }
}

/// Mean of a correlated series with a batch-means standard error.
///
/// The series is cut into `batches` contiguous blocks (trailing
/// remainder dropped from the error estimate only).
pub fn batch_means(xs: &[f64], batches: usize) -> Estimate {
    let batches = batches.clamp(2, xs.len().max(2));
    let len = xs.len() / batches;
    if len == 0 {
        return iid_estimate(xs);
    }
    let bm: Vec<f64> = (0..batches).map(|b| mean(&xs[b * len..(b + 1) * len])).collect();
    Estimate { mean: mean(xs), se: (variance(&bm) / batches as f64).sqrt() }
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Pearson χ² statistic and its p-value for observed counts against
/// expected probabilities (which must sum to one).
pub fn chi_square(observed: &[u64], probs: &[f64]) -> (f64, f64) {
    let total: u64 = observed.iter().sum();
    let t = total as f64;
    let stat: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * t;
            (o as f64 - e) * (o as f64 - e) / e
        })
        .sum();
    let dof = (observed.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat);
    (stat, p)
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `P(Γ(k, 1) ≤ x)`.
pub fn gamma_cdf(k: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        statrs::function::gamma::gamma_lr(k, x)
    }
}
