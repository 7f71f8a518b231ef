use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ocp_core::equilibrium::EquilibriumMeasure;
use ocp_core::io::BatchWriter;
use ocp_core::sampler::{run_chain_streaming, ChainConfig, GasParams, Init, SamplerError};

use crate::config::{ChainBlock, GasBlock};
use crate::output::{log, write_json};
use crate::RunContext;

/// One chain of the `(N, β, replica)` grid. `index` is also its random
/// stream: the chain draws from `"chain/{index}"` under the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTask {
    pub index: usize,
    pub n: usize,
    pub beta: f64,
    pub replica: usize,
}

impl ChainTask {
    /// Batch file stem relative to the output directory.
    pub fn stem(&self) -> String {
        format!("batches/n{}_beta{}_r{}", self.n, self.beta, self.replica)
    }
}

pub fn tasks(gas: &GasBlock, chain: &ChainBlock) -> Vec<ChainTask> {
    let mut out = Vec::new();
    for &n in &gas.n {
        for &beta in &gas.beta {
            for replica in 0..chain.replicas {
                out.push(ChainTask { index: out.len(), n, beta, replica });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainRecord {
    #[serde(flatten)]
    pub task: ChainTask,
    pub stem: String,
    pub rng_path: String,
    pub frames: usize,
    pub acceptance_rate: f64,
    pub step_size: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSummary {
    pub seed: u64,
    pub chains: Vec<ChainRecord>,
}

fn run_task(
    ctx: &RunContext,
    seed: u64,
    chain: &ChainBlock,
    eq: &dyn EquilibriumMeasure,
    t: &ChainTask,
) -> Result<ChainRecord> {
    let params = GasParams::new(t.n, t.beta, ctx.config.potential()?)?;
    let cfg = ChainConfig {
        algorithm: chain.algorithm,
        sweeps: chain.sweeps,
        burn_in: chain.burn_in,
        thinning: chain.thinning,
        step_size: chain.step_size,
        seed,
        stream: t.index,
    };
    let stem = t.stem();
    let mut w = BatchWriter::create(&ctx.out.join(&stem), &params, &cfg)?;
    let summary = run_chain_streaming(&params, &cfg, Init::EquilibriumIid(eq), &mut |c, e| {
        w.push(c, e).map_err(|e| SamplerError::Sink(e.to_string()))
    })
    .with_context(|| format!("chain {} (N = {}, β = {})", t.index, t.n, t.beta))?;
    let meta = w.finish(&summary)?;
    eprintln!(
        "chain {:>3}  N = {:<4} β = {:<5} frames {:<7} acceptance {:.3}{}",
        t.index,
        t.n,
        t.beta,
        summary.frames,
        summary.acceptance_rate,
        summary.warning.as_deref().map(|w| format!("  warning: {w}")).unwrap_or_default()
    );
    Ok(ChainRecord {
        task: t.clone(),
        stem,
        rng_path: meta.rng_path,
        frames: summary.frames,
        acceptance_rate: summary.acceptance_rate,
        step_size: summary.step_size,
        warning: summary.warning,
    })
}

pub fn run(ctx: &RunContext) -> Result<ExitCode> {
    let seed = ctx.config.require_seed()?;
    let (gas, chain) = ctx.config.sampling()?;
    let eq = ctx.config.equilibrium_measure().context("equilibrium measure for initialization")?;
    std::fs::create_dir_all(ctx.out.join("batches"))?;
    let list = tasks(gas, chain);
    let records: Vec<Result<ChainRecord>> = list.par_iter().map(|t| run_task(ctx, seed, chain, eq.as_ref(), t)).collect();
    let chains = records.into_iter().collect::<Result<Vec<_>>>()?;
    for c in &chains {
        log(&ctx.out, &format!("chain {} acceptance {}", c.task.index, c.acceptance_rate));
    }
    write_json(&ctx.out.join("sample_summary.json"), &SampleSummary { seed, chains })?;
    Ok(ExitCode::SUCCESS)
}

/// Batch stems listed in a sample summary.
pub fn summary_stems(ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let path = ctx.out.join("sample_summary.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let s: SampleSummary = serde_json::from_str(&text)?;
    Ok(s.chains.iter().map(|c| ctx.out.join(&c.stem)).collect())
}
