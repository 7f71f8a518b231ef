use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use ocp_core::io::{read_batch, BatchStatus};
use ocp_core::observables::{
    build_h, local_law_report, loop_residual, rigidity_scan, ConstantH, FluctuationReport, IdentityH, LoopReport,
};
use ocp_core::sampler::SampleBatch;
use ocp_core::{Complex, PlanePoint};

use super::sample::summary_stems;
use crate::output::{log, write_csv, write_json};
use crate::RunContext;

#[derive(Debug, Serialize)]
pub struct LocalLawSummary {
    pub s: f64,
    pub center: PlanePoint,
    pub radius: f64,
    pub expected_count: f64,
    pub mean_count: f64,
    pub mean_count_se: f64,
    pub mean_relative_deviation: f64,
    pub mean_relative_deviation_se: f64,
    pub max_bump_deviation: f64,
    pub theorem_bound: f64,
    pub exceed_fraction: f64,
    pub frames_csv: String,
}

#[derive(Debug, Serialize)]
pub struct LoopSummary {
    pub h: String,
    #[serde(flatten)]
    pub report: LoopReport,
}

#[derive(Debug, Serialize)]
pub struct BatchAnalysis {
    pub batch: String,
    pub n: usize,
    pub beta: f64,
    pub frames: usize,
    pub recovered: bool,
    pub local_law: Vec<LocalLawSummary>,
    pub loop_equation: Vec<LoopSummary>,
}

#[derive(Debug, Serialize)]
pub struct Analysis {
    pub batches: Vec<BatchAnalysis>,
    pub rigidity: Option<FluctuationReport>,
}

fn stem_of(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("bin") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn label(stem: &Path) -> String {
    stem.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn run(ctx: &RunContext, paths: &[PathBuf]) -> Result<ExitCode> {
    let stems: Vec<PathBuf> = if paths.is_empty() { summary_stems(ctx)? } else { paths.iter().map(|p| stem_of(p)).collect() };
    if stems.is_empty() {
        bail!("no batches to analyze");
    }
    let cfg = &ctx.config;
    let p = cfg.potential()?;
    let eq = cfg.equilibrium_measure()?;
    let dir = ctx.out.join("analysis");
    std::fs::create_dir_all(&dir)?;
    let mut loaded: Vec<SampleBatch> = Vec::new();
    let mut analyses = Vec::new();
    for stem in &stems {
        let (batch, status) = read_batch(stem).with_context(|| format!("reading batch {}", stem.display()))?;
        let name = label(stem);
        let mut local = Vec::new();
        for (ci, c) in cfg.observables.centers.iter().enumerate() {
            let z0 = PlanePoint::new(c[0], c[1]);
            for &s in &cfg.observables.scales {
                let rep = local_law_report(&batch, eq.as_ref(), z0, s)?;
                let csv_name = format!("local_{name}_s{s}_c{ci}.csv");
                write_csv(&dir.join(&csv_name), &rep.rows)?;
                local.push(LocalLawSummary {
                    s,
                    center: z0,
                    radius: rep.radius,
                    expected_count: rep.expected_count,
                    mean_count: rep.mean_count.mean,
                    mean_count_se: rep.mean_count.se,
                    mean_relative_deviation: rep.mean_relative_deviation.mean,
                    mean_relative_deviation_se: rep.mean_relative_deviation.se,
                    max_bump_deviation: rep.max_bump_deviation,
                    theorem_bound: rep.theorem_bound,
                    exceed_fraction: rep.exceed_fraction,
                    frames_csv: format!("analysis/{csv_name}"),
                });
            }
        }
        let beta = batch.params.beta;
        let bump = build_h(&cfg.observables.loop_bump.at(batch.params.n)?, &p)?;
        let loops = vec![
            LoopSummary { h: "constant".into(), report: loop_residual(&batch, &ConstantH(Complex::new(1.0, 0.0)), &p, beta)? },
            LoopSummary { h: "identity".into(), report: loop_residual(&batch, &IdentityH, &p, beta)? },
            LoopSummary { h: "bump".into(), report: loop_residual(&batch, &bump, &p, beta)? },
        ];
        analyses.push(BatchAnalysis {
            batch: name,
            n: batch.params.n,
            beta,
            frames: batch.configs.len(),
            recovered: status != BatchStatus::Complete,
            local_law: local,
            loop_equation: loops,
        });
        loaded.push(batch);
    }
    let mut ns: Vec<usize> = loaded.iter().map(|b| b.params.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let rigidity = match &cfg.observables.rigidity {
        Some(fam) if ns.len() >= 3 => {
            let rep = rigidity_scan(&loaded, fam, eq.as_ref(), cfg.observables.null_draws, cfg.seed.unwrap_or(0))?;
            write_csv(&dir.join("rigidity.csv"), &rep.rows)?;
            Some(rep)
        }
        Some(_) => {
            eprintln!("rigidity scan skipped: needs at least 3 distinct N, have {}", ns.len());
            None
        }
        None => None,
    };
    write_json(&ctx.out.join("analyze.json"), &Analysis { batches: analyses, rigidity })?;
    log(&ctx.out, &format!("analyze: {} batches", stems.len()));
    Ok(ExitCode::SUCCESS)
}
