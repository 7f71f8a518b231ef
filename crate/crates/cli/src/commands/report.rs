use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::{bail, Result};
use serde_json::Value;

use crate::RunContext;

fn load(ctx: &RunContext, name: &str) -> Option<Value> {
    let text = std::fs::read_to_string(ctx.out.join(name)).ok()?;
    serde_json::from_str(&text).ok()
}

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e5) => format!("{x:.3e}"),
        Some(x) => format!("{x:.4}"),
        None => v.to_string(),
    }
}

/// Markdown digest of whatever summaries exist in the output directory.
pub fn run(ctx: &RunContext) -> Result<ExitCode> {
    let mut md = String::from("# Run report\n");
    let mut any = false;
    if let Some(eq) = load(ctx, "equilibrium_report.json") {
        any = true;
        let _ = writeln!(md, "\n## Equilibrium\n");
        for k in ["f_constant", "mass", "support_radius_estimate", "el_on_support_max", "el_off_support_min"] {
            let _ = writeln!(md, "- {k}: {}", num(&eq[k]));
        }
    }
    if let Some(s) = load(ctx, "sample_summary.json") {
        any = true;
        let _ = writeln!(md, "\n## Chains (seed {})\n\n| chain | N | β | frames | acceptance |\n|---|---|---|---|---|", s["seed"]);
        for c in s["chains"].as_array().into_iter().flatten() {
            let _ = writeln!(md, "| {} | {} | {} | {} | {} |", c["index"], c["n"], c["beta"], c["frames"], num(&c["acceptance_rate"]));
        }
    }
    if let Some(v) = load(ctx, "verify.json") {
        any = true;
        let _ = writeln!(md, "\n## Identity suite\n\n| check | status | value | tolerance | source |\n|---|---|---|---|---|");
        for c in v.as_array().into_iter().flatten() {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} {} | {} |",
                c["name"].as_str().unwrap_or(""),
                c["status"].as_str().unwrap_or(""),
                num(&c["value"]),
                c["comparison"].as_str().unwrap_or(""),
                num(&c["tolerance"]),
                c["source"].as_str().unwrap_or("")
            );
        }
    }
    if let Some(a) = load(ctx, "analyze.json") {
        any = true;
        let _ = writeln!(md, "\n## Local law\n\n| batch | s | expected | mean count | mean rel. dev. | bound | exceed |\n|---|---|---|---|---|---|---|");
        for b in a["batches"].as_array().into_iter().flatten() {
            for l in b["local_law"].as_array().into_iter().flatten() {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    b["batch"].as_str().unwrap_or(""),
                    l["s"],
                    num(&l["expected_count"]),
                    num(&l["mean_count"]),
                    num(&l["mean_relative_deviation"]),
                    num(&l["theorem_bound"]),
                    num(&l["exceed_fraction"])
                );
            }
        }
        let _ = writeln!(md, "\n## Loop equation\n\n| batch | h | Re | Im | s.e. |\n|---|---|---|---|---|");
        for b in a["batches"].as_array().into_iter().flatten() {
            for l in b["loop_equation"].as_array().into_iter().flatten() {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {} |",
                    b["batch"].as_str().unwrap_or(""),
                    l["h"].as_str().unwrap_or(""),
                    num(&l["estimate"]["re"]),
                    num(&l["estimate"]["im"]),
                    num(&l["std_error"])
                );
            }
        }
        if let Some(r) = a.get("rigidity").filter(|r| !r.is_null()) {
            let _ = writeln!(md, "\n## Rigidity\n\n| N | Var gas | Var null | ratio |\n|---|---|---|---|");
            for row in r["rows"].as_array().into_iter().flatten() {
                let _ = writeln!(md, "| {} | {} | {} | {} |", row["n"], num(&row["var_gas"]), num(&row["var_null"]), num(&row["ratio"]));
            }
            let _ = writeln!(md, "\nlog-log slopes: gas {}, null {}", num(&r["gas_slope"]), num(&r["null_slope"]));
        }
    }
    if !any {
        bail!("no summaries found in {}", ctx.out.display());
    }
    std::fs::write(ctx.out.join("report.md"), md)?;
    Ok(ExitCode::SUCCESS)
}
