use std::process::ExitCode;

use anyhow::Result;
use serde::Serialize;

use ocp_core::equilibrium::{
    euler_lagrange_residual, solve_equilibrium_radial, solve_obstacle, EquilibriumError, GridSpec, SolverDiagnostics,
};
use ocp_core::io::write_equilibrium;

use crate::output::{log, write_json};
use crate::RunContext;

/// Off-support Euler–Lagrange slack accepted as grid-order error.
pub const OFF_SUPPORT_TOL: f64 = 1e-4;

#[derive(Debug, Serialize)]
pub struct RadialComparison {
    pub support_radius: f64,
    pub f_constant: f64,
    pub radius_error: f64,
    pub radius_within_2h: bool,
    pub f_error: f64,
}

#[derive(Debug, Serialize)]
pub struct EquilibriumReport {
    pub grid: GridSpec,
    pub h: f64,
    pub f_constant: f64,
    pub mass: f64,
    pub support_radius_estimate: f64,
    pub el_on_support_max: f64,
    pub el_off_support_min: f64,
    pub off_support_tolerance: f64,
    pub off_support_ok: bool,
    pub diagnostics: SolverDiagnostics,
    pub radial_oracle: Option<RadialComparison>,
}

#[derive(Debug, Serialize)]
struct Failure {
    error: String,
    iterations: Option<usize>,
    residual: Option<f64>,
    mass: Option<f64>,
}

pub fn run(ctx: &RunContext) -> Result<ExitCode> {
    let p = ctx.config.potential()?;
    let grid = ctx.config.grid()?;
    let eq = match solve_obstacle(&p, grid, &ctx.config.equilibrium.solver) {
        Ok(eq) => eq,
        Err(e) => {
            let (iterations, residual, mass) = match &e {
                EquilibriumError::NonConvergence { iterations, residual, mass } => {
                    (Some(*iterations), Some(*residual), Some(*mass))
                }
                _ => (None, None, None),
            };
            write_json(&ctx.out.join("equilibrium_failure.json"), &Failure { error: e.to_string(), iterations, residual, mass })?;
            log(&ctx.out, &format!("equilibrium failed: {e}"));
            return Err(e.into());
        }
    };
    write_equilibrium(&ctx.out.join("equilibrium"), &eq)?;
    let el = euler_lagrange_residual(&eq, &p);
    let center = ctx.config.equilibrium.center;
    let r_est = eq.support_radius_estimate(center);
    let radial_oracle = match p.as_radial() {
        Some(_) => {
            let r = solve_equilibrium_radial(&p)?;
            let radius_error = (r_est - r.support_radius()).abs();
            Some(RadialComparison {
                support_radius: r.support_radius(),
                f_constant: r.f_constant(),
                radius_error,
                radius_within_2h: radius_error <= 2.0 * grid.h(),
                f_error: (eq.f_constant - r.f_constant()).abs(),
            })
        }
        None => None,
    };
    let report = EquilibriumReport {
        grid,
        h: grid.h(),
        f_constant: eq.f_constant,
        mass: eq.measure.mass(),
        support_radius_estimate: r_est,
        el_on_support_max: el.on_support_max,
        el_off_support_min: el.off_support_min,
        off_support_tolerance: OFF_SUPPORT_TOL,
        off_support_ok: el.off_support_min >= -OFF_SUPPORT_TOL,
        diagnostics: eq.diagnostics.clone(),
        radial_oracle,
    };
    write_json(&ctx.out.join("equilibrium_report.json"), &report)?;
    eprintln!(
        "equilibrium: F = {:.6}, support radius ≈ {:.4}, EL on-support {:.2e}, off-support min {:.2e}",
        report.f_constant, r_est, el.on_support_max, el.off_support_min
    );
    log(&ctx.out, "equilibrium done");
    Ok(ExitCode::SUCCESS)
}
