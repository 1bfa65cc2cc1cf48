use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn edm(args: &[&str], envs: &[(&str, &str)]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edm"))
        .args(args)
        .envs(envs.iter().copied())
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SCALED_N2: &str = r#"model={"source":"scaled","n_qubits":2,"omega_q":0.5,"g":1.0}"#;

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"version\": 1,\n  \"model\": [}").unwrap();
    let o = edm(&["ground-sweep", "-c", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = edm(&["ground-sweep", "--set", SCALED_N2, "--set", "model.omega_q=\"x\""], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model"));

    let o = edm(&["ground-sweep", "--set", SCALED_N2, "--set", "model.g=3.0"], &[("EDM_MEMORY_BUDGET_MB", "0")]);
    assert_eq!(o.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&o.stderr));

    let o = edm(&["ground-sweep", "--set", SCALED_N2, "--set", "max_doublings=0", "--set", "model.g=3.0"], &[]);
    assert_eq!(o.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_reports_predictions_and_problems() {
    let o = edm(
        &["validate", "--set", r#"model={"source":"scaled","n_qubits":10,"omega_q":0.5,"g":2.0}"#],
        &[],
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["points"][0]["n_max"], 180);
    assert_eq!(v["points"][0]["dim"], 185344);
    assert_eq!(v["ok"], true);

    let o = edm(
        &["validate", "--target", "disorder", "--set", SCALED_N2, "--set", r#"disorder={"g_width":0.3}"#],
        &[],
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ok"], false);
    assert!(v["violations"].as_array().unwrap().iter().any(|x| x.as_str().unwrap().contains("seed")));

    let flux = r#"model={"source":"flux","circuit":{"c_r":1e-13,"l_r":1e-9,"l_g":3e-10,"phi_q0":1e-16,"omega_q":3.14e10,"n_qubits":2}}"#;
    let o = edm(&["validate", "--target", "circuit-flux", "--set", flux], &[]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["flux"]["delta_positive"], true);
    assert!(v["flux"]["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn hp_at_zero_coupling() {
    let o = edm(&["hp", "--set", SCALED_N2, "--set", "model.g=0.0", "--format", "json"], &[]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &v["rows"][0];
    assert!((row["omega_minus"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(row["n_photon"].as_f64().unwrap(), 0.0);
    assert_eq!(v["command"], "hp");
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn ground_sweep_recipe_rises_and_decouples() {
    let recipe = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ground_n2.json");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = edm(
        &["ground-sweep", "-c", recipe.to_str().unwrap(), "-o", out.to_str().unwrap(), "--threads", "2"],
        &[],
    );
    stdout(&o);
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let headers = reader.headers().unwrap().clone();
    let fixed = [
        "sweep_value", "E0", "gap", "n_photon", "Sz", "Sx", "Sx2", "entropy_q", "entropy_1", "parity", "n_max", "converged",
    ];
    assert_eq!(headers.iter().take(fixed.len()).collect::<Vec<_>>(), fixed);
    let n: Vec<f64> = reader.records().map(|r| r.unwrap()[3].parse().unwrap()).collect();
    assert_eq!(n.len(), 41);
    let peak = n.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!(peak.0 > 0 && peak.0 < 40);
    assert!(n[40] < 1e-2);
}
