use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hllk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hllk")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn trajectory_export_hits_helix_at_pi() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = hllk(&[
        "trajectory", "--omega", "0,0,1", "--v0", "1,0,0", "--x0", "0,0,0", "--t-max", "10", "--dt", "1e-3",
        "--at", "3.141592653589793", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,x3,v1,v2,v3"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 10_002);
    assert_eq!(rows[0], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let at_pi = rows.iter().find(|r| r[0] == std::f64::consts::PI).expect("row at t = π");
    // x(π) = n×v0 (1 − cos π) for ω = ẑ, v0 = x̂
    assert!((at_pi[1] - 0.0).abs() <= 1e-8 && (at_pi[2] - 2.0).abs() <= 1e-8 && at_pi[3].abs() <= 1e-8);
    assert_eq!(rows.last().unwrap()[0], 10.0);
}

#[test]
fn trajectory_export_needs_parameters() {
    let out = hllk(&["trajectory", "--omega", "0,0,1", "--t-max", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--v0"));
    let out = hllk(&["trajectory", "--omega", "0,0,1", "--v0", "1,0,0", "--t-max", "1", "--at", "2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_all_passes_and_covers_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = hllk(&["verify-all", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&path);
    let ids: Vec<u64> = report["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, (1..=15).collect::<Vec<u64>>());
    assert!(report["criteria"].as_array().unwrap().iter().all(|c| c["pass"] == Value::Bool(true)));
    assert_eq!(report["summary"]["pass"], Value::Bool(true));
    assert!(report.get("wall_time_s").is_none());
    let info = report["informational"].as_array().unwrap();
    let jac = info.iter().find(|i| i["name"] == "flow.jacobian_experiment").expect("jacobian record");
    assert_eq!(jac["informational"], Value::Bool(true));
    assert!(jac.get("pass").is_none());
    for check in report["checks"].as_array().unwrap() {
        for key in ["name", "paper_ref", "value", "tolerance", "pass"] {
            assert!(check.get(key).is_some(), "{key} missing in {check}");
        }
    }
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert_eq!(code(&hllk(&["canonical", "--seed", "99", "--out", p.to_str().unwrap()])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    assert_eq!(code(&hllk(&["canonical", "--seed", "100", "--out", c.to_str().unwrap()])), 0);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn zero_tolerance_forces_failure() {
    let out = hllk(&["trajectory", "--tol", "trajectory.rk4_vs_closed_form=0"]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["summary"]["pass"], Value::Bool(false));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trajectory.rk4_vs_closed_form"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(code(&hllk(&["no-such-suite"])), 2);
    assert_eq!(code(&hllk(&["so3", "--grid", "4,4"])), 2);
    assert_eq!(code(&hllk(&["so3", "--tol", "bogus.name=1"])), 2);
    assert_eq!(code(&hllk(&["maxwell", "--box", "-1"])), 2);
    let out = hllk(&["flow", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read config"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"seed\": \"x\"}").unwrap();
    assert_eq!(code(&hllk(&["flow", "--config", bad.to_str().unwrap()])), 2);
    let report_dir = dir.path().join("missing").join("r.json");
    assert_eq!(code(&hllk(&["trajectory", "--out", report_dir.to_str().unwrap()])), 2);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 5, "tolerances": {"galilei.decomposition_residual": 0.0}}"#).unwrap();
    let out = hllk(&["trajectory", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["seed"], 5);
    let out = hllk(&["trajectory", "--config", cfg.to_str().unwrap(), "--seed", "6", "--tol", "galilei.decomposition_residual=1e-12"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["seed"], 6);
}

#[test]
fn maxwell_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let modes = dir.path().join("modes.json");
    let field = dir.path().join("field.csv");
    let out = hllk(&[
        "maxwell", "--modes-out", modes.to_str().unwrap(), "--field-csv", field.to_str().unwrap(),
        "--out", dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&modes);
    assert_eq!(json["modes"].as_array().unwrap().len(), 50);
    assert!(json["modes"].as_array().unwrap().iter().all(|m| m["a"] == "+" || m["a"] == "-"));
    let text = std::fs::read_to_string(&field).unwrap();
    assert_eq!(text.lines().next(), Some("t,x1,x2,x3,E1,E2,E3,B1,B2,B3"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn timing_is_opt_in() {
    let out = hllk(&["trajectory", "--timing"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["wall_time_s"].as_f64().unwrap() >= 0.0);
}
