use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const ISO: &str = r#"{
    "g": 1, "m": 1, "ell": 1, "rho0_minus": 1,
    "law_minus": {"kind": "isothermal", "K": 2},
    "law_plus": {"kind": "isothermal", "K": 1},
    "grid": {"n_lower": 64, "n_upper": 64}
}"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtlinear")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dispersion_writes_requested_rows_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "iso.json", ISO);
    let out = tmp.path().join("d");
    let o = bin(&["dispersion", "--config", path(&cfg), "--out", path(&out), "--xi-count", "100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("dispersion.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("xi,lambda,mu,el_residual,flux_jump,psi0"));
    assert_eq!(lines.count(), 100);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["points"], 100);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "dispersion");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn outputs_are_deterministic_and_replayable() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "iso.json", ISO);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert!(bin(&["dispersion", "--config", path(&cfg), "--out", path(d), "--xi-count", "12", "--log"]).status.success());
    }
    assert_eq!(fs::read(a.join("dispersion.csv")).unwrap(), fs::read(b.join("dispersion.csv")).unwrap());
    let r = tmp.path().join("r");
    let o = bin(&["replay", path(&a.join("manifest.json")), "--out", path(&r)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("reproduced all outputs"));
    assert_eq!(fs::read(a.join("dispersion.csv")).unwrap(), fs::read(r.join("dispersion.csv")).unwrap());
}

#[test]
fn selftest_on_stable_config_reports_no_growth() {
    let tmp = TempDir::new().unwrap();
    let text = ISO.replace(r#""K": 2}"#, r#""K": 1}"#).replacen(r#""law_plus": {"kind": "isothermal", "K": 1}"#, r#""law_plus": {"kind": "isothermal", "K": 2}"#, 1);
    let cfg = write_config(tmp.path(), "stable.json", &text);
    let o = bin(&["selftest", "--config", path(&cfg), "--config-only", "--out", path(&tmp.path().join("s"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("no growing modes"));
}

#[test]
fn usage_errors_exit_two() {
    let o = bin(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(bin(&["dispersion"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_one_with_structured_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "nog.json", &ISO.replace(r#""g": 1, "#, ""));
    let out = tmp.path().join("e");
    let o = bin(&["steady", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "error");
    assert!(report["message"].as_str().unwrap().contains("`g`"));

    let cfg = write_config(
        tmp.path(),
        "gamma.json",
        &ISO.replace(r#"{"kind": "isothermal", "K": 2}"#, r#"{"kind": "polytropic", "K": 2, "gamma": 0.5}"#),
    );
    let o = bin(&["steady", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma >= 1"));
}

#[test]
fn synth_on_stable_config_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let text = ISO
        .replace(r#""K": 2}"#, r#""K": 0.5}"#)
        .replace(r#""grid""#, r#""synth": {"R2": 1, "R3": 2, "times": [0, 1]}, "grid""#);
    let cfg = write_config(tmp.path(), "s.json", &text);
    let o = bin(&["synth", "--config", path(&cfg), "--out", path(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stable"));
}

#[test]
fn steady_and_evolve_tables() {
    let tmp = TempDir::new().unwrap();
    let text = ISO.replace(
        r#""grid""#,
        r#""evolve": {"modes": [{"xi": [3, 4], "init": "eigen"}, {"xi": [0, 0], "init": "zero"}], "t_end": 0.2, "dt": 0.001}, "grid""#,
    );
    let cfg = write_config(tmp.path(), "e.json", &text);
    let out = tmp.path().join("o");
    assert!(bin(&["steady", "--config", path(&cfg), "--out", path(&out), "--samples", "11"]).status.success());
    let csv = fs::read_to_string(out.join("steady.csv")).unwrap();
    assert!(csv.starts_with("x3,rho0,drho0,side\n"));
    assert_eq!(csv.lines().count(), 23);
    let o = bin(&["evolve", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("evolve.csv")).unwrap();
    assert!(csv.starts_with("t,energy,drift,l2_v,l2_dtv,fitted_rate\n"));
    assert_eq!(csv.lines().count(), 22);
}
