use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::energy::{energy_delta_move, site_gradient, total_energy};
use super::{Configuration, GasParams, SamplerError};
use crate::equilibrium::EquilibriumMeasure;
use crate::kernel::PlanePoint;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Single-site Gaussian random walk.
    RandomWalk,
    /// Single-site Langevin proposal with Metropolis–Hastings correction.
    GradientProposal,
}

/// Chain schedule. Lengths are counted in sweeps of `N` single-site
/// proposals; `sweeps` includes the burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub algorithm: Algorithm,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    /// Proposal width; `None` means `0.8/√(βN)`.
    #[serde(default)]
    pub step_size: Option<f64>,
    pub seed: u64,
    /// Index of the random stream, for independent replicas.
    #[serde(default)]
    pub stream: usize,
}

impl ChainConfig {
    pub fn new(algorithm: Algorithm, sweeps: usize, burn_in: usize, thinning: usize, seed: u64) -> Self {
        Self { algorithm, sweeps, burn_in, thinning, step_size: None, seed, stream: 0 }
    }

    pub fn with_step_size(mut self, step: f64) -> Self {
        self.step_size = Some(step);
        self
    }

    pub fn with_stream(mut self, stream: usize) -> Self {
        self.stream = stream;
        self
    }

    pub fn step_size_for(&self, params: &GasParams) -> f64 {
        self.step_size.unwrap_or(0.8 / (params.beta * params.n as f64).sqrt())
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.sweeps <= self.burn_in {
            return Err(SamplerError::Argument(format!(
                "sweeps ({}) must exceed burn-in ({})",
                self.sweeps, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(SamplerError::Argument("thinning must be at least 1".into()));
        }
        if let Some(s) = self.step_size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(SamplerError::Argument(format!("step size must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// Number of frames the schedule records.
    pub fn frames(&self) -> usize {
        (self.sweeps - self.burn_in) / self.thinning
    }
}

/// Starting point of a chain.
pub enum Init<'a> {
    /// `N` i.i.d. draws from an equilibrium measure.
    EquilibriumIid(&'a dyn EquilibriumMeasure),
    Explicit(Configuration),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub frames: usize,
    /// Accepted fraction of post-burn-in proposals.
    pub acceptance_rate: f64,
    pub step_size: f64,
    pub warning: Option<String>,
}

/// A chain's recorded frames with their exact energies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleBatch {
    pub params: GasParams,
    pub chain: ChainConfig,
    pub configs: Vec<Configuration>,
    pub energies: Vec<f64>,
    pub acceptance_rate: f64,
    pub step_size: f64,
    pub warning: Option<String>,
}

/// Metropolis–Hastings acceptance for log target ratio `log_ratio`,
/// consuming exactly one uniform.
pub fn accept(log_ratio: f64, rng: &mut impl Rng) -> bool {
    let u: f64 = rng.random();
    log_ratio >= 0.0 || u < log_ratio.exp()
}

fn initial(params: &GasParams, chain: &ChainConfig, init: Init<'_>) -> Result<Configuration, SamplerError> {
    let c = match init {
        Init::Explicit(c) => {
            if c.len() != params.n {
                return Err(SamplerError::Argument(format!(
                    "initial configuration has {} points, expected {}",
                    c.len(),
                    params.n
                )));
            }
            c
        }
        Init::EquilibriumIid(eq) => {
            let mut r = rng::indexed(chain.seed, "init", chain.stream);
            let region = params.potential.finite_region();
            let mut pts = Vec::with_capacity(params.n);
            for _ in 0..params.n {
                let mut z = eq.sample(&mut r);
                let mut tries = 0;
                while !(region.contains(z) && params.potential.value(z).is_finite()) || pts.contains(&z) {
                    z = eq.sample(&mut r);
                    tries += 1;
                    if tries > 1000 {
                        return Err(SamplerError::InfiniteInitialEnergy);
                    }
                }
                pts.push(z);
            }
            Configuration::new(pts)
        }
    };
    if !total_energy(&c, &params.potential, params.n).is_finite() {
        return Err(SamplerError::InfiniteInitialEnergy);
    }
    Ok(c)
}

/// Run a chain, handing each recorded frame and its energy to `sink`.
///
/// One sweep is `N` proposals at uniformly chosen sites. Frames are taken
/// after every `thinning`-th post-burn-in sweep. The random stream is
/// `"chain/{stream}"` under the chain seed, so output is a pure function
/// of the inputs.
pub fn run_chain_streaming(
    params: &GasParams,
    chain: &ChainConfig,
    init: Init<'_>,
    sink: &mut dyn FnMut(&Configuration, f64) -> Result<(), SamplerError>,
) -> Result<ChainSummary, SamplerError> {
    chain.validate()?;
    let mut c = initial(params, chain, init)?;
    let n = params.n;
    let beta = params.beta;
    let p = &params.potential;
    let tau = chain.step_size_for(params);
    let mut r = rng::indexed(chain.seed, "chain", chain.stream);
    let mut accepted: u64 = 0;
    let mut proposed: u64 = 0;
    let mut frames = 0;
    for sweep in 0..chain.sweeps {
        let counting = sweep >= chain.burn_in;
        for _ in 0..n {
            let j = r.random_range(0..n);
            let z = c.points[j];
            let xi: f64 = r.sample(StandardNormal);
            let eta: f64 = r.sample(StandardNormal);
            let ok = match chain.algorithm {
                Algorithm::RandomWalk => {
                    let new = PlanePoint::new(z.x + tau * xi, z.y + tau * eta);
                    let d = energy_delta_move(&c, j, new, p, n);
                    let ok = accept(-beta * d, &mut r);
                    if ok {
                        c.points[j] = new;
                    }
                    ok
                }
                Algorithm::GradientProposal => {
                    let half = 0.5 * tau * tau * beta;
                    let g = site_gradient(&c, j, z, p, n)?;
                    let mean = PlanePoint::new(z.x - half * g[0], z.y - half * g[1]);
                    let new = PlanePoint::new(mean.x + tau * xi, mean.y + tau * eta);
                    let d = energy_delta_move(&c, j, new, p, n);
                    let log_ratio = match (d.is_finite(), site_gradient(&c, j, new, p, n)) {
                        (true, Ok(g2)) => {
                            let back = PlanePoint::new(new.x - half * g2[0], new.y - half * g2[1]);
                            let fwd = new.dist_sqr(mean);
                            let bwd = z.dist_sqr(back);
                            -beta * d + (fwd - bwd) / (2.0 * tau * tau)
                        }
                        _ => f64::NEG_INFINITY,
                    };
                    let ok = accept(log_ratio, &mut r);
                    if ok {
                        c.points[j] = new;
                    }
                    ok
                }
            };
            if counting {
                proposed += 1;
                accepted += ok as u64;
            }
        }
        if counting && (sweep + 1 - chain.burn_in) % chain.thinning == 0 {
            let e = total_energy(&c, p, n);
            sink(&c, e)?;
            frames += 1;
        }
    }
    let acceptance_rate = accepted as f64 / proposed.max(1) as f64;
    let warning = (acceptance_rate < 0.01).then(|| {
        format!("acceptance rate {acceptance_rate:.4} below 1%; consider a smaller step size")
    });
    Ok(ChainSummary { frames, acceptance_rate, step_size: tau, warning })
}

/// Run a chain and keep all frames in memory.
pub fn run_chain(params: &GasParams, chain: &ChainConfig, init: Init<'_>) -> Result<SampleBatch, SamplerError> {
    let mut configs = Vec::with_capacity(chain.frames());
    let mut energies = Vec::with_capacity(chain.frames());
    let summary = run_chain_streaming(params, chain, init, &mut |c, e| {
        configs.push(c.clone());
        energies.push(e);
        Ok(())
    })?;
    Ok(SampleBatch {
        params: params.clone(),
        chain: chain.clone(),
        configs,
        energies,
        acceptance_rate: summary.acceptance_rate,
        step_size: summary.step_size,
        warning: summary.warning,
    })
}
