//! Experiment configuration.
//!
//! ```toml
//! seed = 42
//! out = "runs/quadratic"
//!
//! [potential]
//! kind = "quadratic"
//!
//! [gas]
//! n = [16, 32]
//! beta = [1.0, 2.0]
//!
//! [chain]
//! algorithm = "random-walk"     # or "gradient-proposal"
//! sweeps = 20000                # including burn-in
//! burn_in = 2000
//! thinning = 1
//! replicas = 1
//!
//! [equilibrium]
//! half_width = 2.0
//! n = 256
//!
//! [observables]
//! scales = [0.25]
//! centers = [[0.0, 0.0]]
//! rigidity = { center = { x = 0.0, y = 0.0 }, s = 0.0, profile = "quartic" }
//! ```
//!
//! Unknown keys anywhere are errors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ocp_core::bump::BumpProfile;
use ocp_core::equilibrium::{
    solve_equilibrium_radial, solve_obstacle, EquilibriumMeasure, GridSpec, ObstacleOptions,
};
use ocp_core::observables::BumpFamily;
use ocp_core::potential::{Potential, PotentialSpec};
use ocp_core::sampler::Algorithm;
use ocp_core::PlanePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub gas: Option<GasBlock>,
    #[serde(default)]
    pub chain: Option<ChainBlock>,
    #[serde(default)]
    pub equilibrium: EquilibriumBlock,
    #[serde(default)]
    pub observables: ObservablesBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasBlock {
    pub n: Vec<usize>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    pub sweeps: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default)]
    pub step_size: Option<f64>,
    /// Independent chains per `(N, β)`.
    #[serde(default = "one")]
    pub replicas: usize,
}

fn default_algorithm() -> Algorithm {
    Algorithm::RandomWalk
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureSource {
    /// Closed form when the potential is radial, grid solve otherwise.
    #[default]
    Auto,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumBlock {
    #[serde(default)]
    pub center: PlanePoint,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_grid_n")]
    pub n: usize,
    #[serde(default)]
    pub solver: ObstacleOptions,
    /// Where sampling and analysis take `μ_V` from.
    #[serde(default)]
    pub measure: MeasureSource,
}

fn default_half_width() -> f64 {
    2.0
}

fn default_grid_n() -> usize {
    256
}

impl Default for EquilibriumBlock {
    fn default() -> Self {
        Self {
            center: PlanePoint::ORIGIN,
            half_width: default_half_width(),
            n: default_grid_n(),
            solver: ObstacleOptions::default(),
            measure: MeasureSource::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesBlock {
    /// Local-law scale exponents `s`.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default = "default_centers")]
    pub centers: Vec<[f64; 2]>,
    /// Bump for the loop-equation residual (`h = 4∂̄f/ΔV`).
    #[serde(default = "default_loop_bump")]
    pub loop_bump: BumpFamily,
    #[serde(default)]
    pub rigidity: Option<BumpFamily>,
    #[serde(default = "default_null_draws")]
    pub null_draws: usize,
}

fn default_scales() -> Vec<f64> {
    vec![0.25]
}

fn default_centers() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0]]
}

fn default_loop_bump() -> BumpFamily {
    BumpFamily { center: PlanePoint::new(0.25, -0.1), s: 0.0, profile: BumpProfile::Quintic, amplitude: 1.0 }
}

fn default_null_draws() -> usize {
    2000
}

impl Default for ObservablesBlock {
    fn default() -> Self {
        Self {
            scales: default_scales(),
            centers: default_centers(),
            loop_bump: default_loop_bump(),
            rigidity: None,
            null_draws: default_null_draws(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.build().context("[potential]")?;
        let o = &self.observables;
        for &s in &o.scales {
            if !(0.0..0.5).contains(&s) {
                bail!("[observables] scale s = {s} must lie in [0, 1/2)");
            }
        }
        for fam in std::iter::once(&o.loop_bump).chain(&o.rigidity) {
            if !(0.0..0.5).contains(&fam.s) {
                bail!("[observables] bump scale s = {} must lie in [0, 1/2)", fam.s);
            }
        }
        if let Some(g) = &self.gas {
            if g.n.is_empty() || g.beta.is_empty() {
                bail!("[gas] needs at least one n and one beta");
            }
            if let Some(&b) = g.beta.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
                bail!("[gas] beta = {b} must be positive");
            }
            if g.n.contains(&0) {
                bail!("[gas] n must be at least 1");
            }
        }
        if let Some(c) = &self.chain {
            if c.sweeps <= c.burn_in {
                bail!("[chain] sweeps ({}) must exceed burn_in ({})", c.sweeps, c.burn_in);
            }
            if c.thinning == 0 || c.replicas == 0 {
                bail!("[chain] thinning and replicas must be at least 1");
            }
        }
        let e = &self.equilibrium;
        if !(e.half_width > 0.0) || e.n < 16 {
            bail!("[equilibrium] needs half_width > 0 and n ≥ 16");
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<Potential> {
        Ok(self.potential.build()?)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let e = &self.equilibrium;
        Ok(GridSpec::new(e.center, e.half_width, e.n)?)
    }

    /// Master seed; sampling commands require one.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed.context("a master seed is required: set `seed` in the config or pass --seed")
    }

    pub fn sampling(&self) -> Result<(&GasBlock, &ChainBlock)> {
        match (&self.gas, &self.chain) {
            (Some(g), Some(c)) => Ok((g, c)),
            _ => bail!("sampling needs both [gas] and [chain] blocks"),
        }
    }

    /// `μ_V` for sampling and analysis: closed form for radial potentials
    /// unless a grid solve is requested.
    pub fn equilibrium_measure(&self) -> Result<Box<dyn EquilibriumMeasure>> {
        let p = self.potential()?;
        if self.equilibrium.measure == MeasureSource::Auto && p.as_radial().is_some() {
            return Ok(Box::new(solve_equilibrium_radial(&p)?));
        }
        Ok(Box::new(solve_obstacle(&p, self.grid()?, &self.equilibrium.solver)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::parse("seed = 1\n[potential]\nkind = \"quadratic\"\n").unwrap();
        assert_eq!(c.seed, Some(1));
        assert_eq!(c.equilibrium.n, 256);
        assert!(c.sampling().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let e = ExperimentConfig::parse("seed = 1\n[chain]\nsweeps = 10\nburn_in = 1\nstepz = 3\n").unwrap_err();
        let msg = format!("{e:#}");
        assert!(msg.contains("stepz") && msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn scales_must_be_mesoscopic() {
        assert!(ExperimentConfig::parse("[observables]\nscales = [0.5]\n").is_err());
        assert!(ExperimentConfig::parse("[observables]\nscales = [0.0, 0.49]\n").is_ok());
    }

    #[test]
    fn chain_block_is_checked() {
        let t = "[gas]\nn = [4]\nbeta = [1.0]\n[chain]\nsweeps = 10\nburn_in = 10\n";
        assert!(ExperimentConfig::parse(t).is_err());
        assert!(ExperimentConfig::parse("[gas]\nn = [4]\nbeta = [0.0]\n").is_err());
    }
}
