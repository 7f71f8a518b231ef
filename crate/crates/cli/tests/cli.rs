use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ocp(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocp"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

const SMALL: &str = r#"
seed = 3
[potential]
kind = "quadratic"
[gas]
n = [8, 12, 16]
beta = [1.0]
[chain]
sweeps = 600
burn_in = 100
thinning = 2
[equilibrium]
half_width = 2.0
n = 96
[observables]
scales = [0.0]
centers = [[0.0, 0.0]]
rigidity = { center = { x = 0.0, y = 0.0 }, s = 0.0, profile = "quartic" }
null_draws = 200
"#;

fn setup(text: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    (dir, cfg, out)
}

#[test]
fn quadratic_equilibrium_writes_outputs() {
    let (_d, cfg, out) = setup(SMALL);
    let o = ocp(&cfg, &out, &["equilibrium"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["equilibrium.json", "equilibrium.bin", "equilibrium_report.json", "run.log"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rep = json(out.join("equilibrium_report.json"));
    assert_eq!(rep["off_support_ok"], true);
    assert_eq!(rep["radial_oracle"]["radius_within_2h"], true);
    let n = 96u64;
    assert_eq!(std::fs::metadata(out.join("equilibrium.bin")).unwrap().len(), 16 + 17 * n * n);
}

#[test]
fn quartic_support_radius() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quartic.toml");
    let dir = tempfile::tempdir().unwrap();
    let o = ocp(&cfg, dir.path(), &["equilibrium"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(dir.path().join("equilibrium_report.json"));
    let r = rep["radial_oracle"]["support_radius"].as_f64().unwrap();
    assert!((r - 2f64.powf(-0.25)).abs() < 1e-9);
    assert_eq!(rep["radial_oracle"]["radius_within_2h"], true);
}

#[test]
fn malformed_config_names_line_and_field() {
    let (_d, cfg, out) = setup("seed = 1\n[potential]\nkind = \"quadratic\"\n[chain]\nstepz = 3\nsweeps = 10\n");
    let o = ocp(&cfg, &out, &["sample"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("stepz"), "{err}");
}

#[test]
fn sampling_needs_a_seed() {
    let (_d, cfg, out) = setup(&SMALL.replace("seed = 3", ""));
    let o = ocp(&cfg, &out, &["sample"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn sample_is_reproducible() {
    let (d, cfg, out) = setup(SMALL);
    assert!(ocp(&cfg, &out, &["sample"]).status.success());
    let again = d.path().join("again");
    assert!(ocp(&cfg, &again, &["sample"]).status.success());
    let summary = json(out.join("sample_summary.json"));
    let chains = summary["chains"].as_array().unwrap();
    assert_eq!(chains.len(), 3);
    for c in chains {
        let a = c["acceptance_rate"].as_f64().unwrap();
        assert!(a > 0.0 && a < 1.0, "{a}");
        assert_eq!(c["frames"], 250);
        let stem = c["stem"].as_str().unwrap();
        for ext in ["bin", "json"] {
            let x = std::fs::read(out.join(format!("{stem}.{ext}"))).unwrap();
            let y = std::fs::read(again.join(format!("{stem}.{ext}"))).unwrap();
            assert_eq!(x, y, "{stem}.{ext}");
        }
    }
}

#[test]
fn truncated_batch_is_recovered() {
    let (_d, cfg, out) = setup(SMALL);
    assert!(ocp(&cfg, &out, &["sample"]).status.success());
    let bin = out.join("batches/n16_beta1_r0.bin");
    let bytes = std::fs::read(&bin).unwrap();
    // drop the footer and half a frame
    let frame = 16 * 16;
    std::fs::write(&bin, &bytes[..bytes.len() - 16 - frame / 2]).unwrap();
    let o = ocp(&cfg, &out, &["analyze"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = json(out.join("analyze.json"));
    let rec: Vec<&Value> = a["batches"].as_array().unwrap().iter().filter(|b| b["recovered"] == true).collect();
    assert_eq!(rec.len(), 1);
}

#[test]
fn verify_reports_precondition_rejection() {
    let (_d, cfg, out) = setup(SMALL);
    let o = ocp(&cfg, &out, &["verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let checks = json(out.join("verify.json"));
    let checks = checks.as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] != "fail"), "{checks:?}");
    assert!(checks.iter().any(|c| c["status"] == "precondition-rejected"));
    assert!(out.join("verify.csv").exists());
}

#[test]
fn analyze_and_report() {
    let (_d, cfg, out) = setup(SMALL);
    assert!(ocp(&cfg, &out, &["sample"]).status.success());
    let o = ocp(&cfg, &out, &["analyze"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = json(out.join("analyze.json"));
    assert_eq!(a["batches"].as_array().unwrap().len(), 3);
    assert!(a["rigidity"].is_object());
    assert!(out.join("analysis/rigidity.csv").exists());
    let o = ocp(&cfg, &out, &["report"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(out.join("report.md")).unwrap().starts_with('#'));
}
