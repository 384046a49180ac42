//! End-to-end tests of the `qone` binary.

use std::process::{Command, Output};

fn qone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qone")).args(args).output().expect("qone runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", stdout(o)))
}

#[test]
fn eval_angle_at_one() {
    let o = qone(&["eval", "angle", "--omega", "0.7071067812", "--x", "1,0", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let fields: Vec<f64> = line.trim().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(fields.len(), 3);
    assert!(fields[0].abs() < 1e-12);
    assert!((fields[1] - 1.189207115002721).abs() < 1e-9);
}

#[test]
fn eval_qbeta_matches_closed_form() {
    let args = ["eval", "qbeta", "--omega", "0.7071067812", "--alpha", "0.4", "--beta", "0.9"];
    let numeric = json(&qone(&args));
    let mut exact_args = args.to_vec();
    exact_args.push("--exact");
    let exact = json(&qone(&exact_args));
    let d = ((numeric["re"].as_f64().unwrap() - exact["re"].as_f64().unwrap()).powi(2)
        + (numeric["im"].as_f64().unwrap() - exact["im"].as_f64().unwrap()).powi(2))
    .sqrt();
    assert!(d < 1e-9, "difference {d}");
    assert!(numeric["abs_err"].as_f64().unwrap() < 1e-9);
}

#[test]
fn eval_psi_outside_window() {
    let o = qone(&["eval", "psi", "--alpha", "0.4", "--beta", "1.2", "--gamma", "1.3", "--x", "3.0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("x outside convergence window (0, 2.114"), "{err}");
}

#[test]
fn eval_missing_flag_is_usage_error() {
    let o = qone(&["eval", "psi", "--alpha", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("requires --beta"));
}

#[test]
fn sweep_psi_rows() {
    let o = qone(&["sweep", "psi", "--alpha", "0.4", "--beta", "1.2", "--gamma", "1.3", "--x", "0.1:0.5:0.1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    let feasible = r.headers().unwrap().iter().position(|h| h == "feasible").unwrap();
    assert!(rows.iter().all(|row| &row[feasible] == "true"));
}

#[test]
fn sweep_qbeta_flag_flips_at_zero() {
    let o = qone(&["sweep", "qbeta", "--alpha=-0.2:0.2:0.1", "--beta", "0.9", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = json(&o);
    let flags: Vec<(f64, bool)> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["alpha"].as_f64().unwrap(), r["feasible"].as_bool().unwrap()))
        .collect();
    for (a, f) in flags {
        assert_eq!(f, a > 0.0, "alpha {a}");
    }
}

#[test]
fn sweep_diffeq_residual_column() {
    let o = qone(&[
        "sweep", "psi", "--alpha", "0.4", "--beta", "1.2", "--gamma", "2.0", "--x", "0.1:0.3:0.1", "--check", "diffeq", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for row in json(&o).as_array().unwrap() {
        let r = row["residual"].as_f64().unwrap();
        assert!(r < 1e-8, "residual {r}");
    }
}

#[test]
fn sweep_cap_checked_first() {
    let o = qone(&["sweep", "psi", "--alpha", "0:1:0.001", "--x", "0:1:0.001", "--beta", "1", "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cap"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn verify_exit_codes() {
    let o = qone(&["verify", "qbeta", "--omega", "0.7071067812", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&o);
    assert_eq!(report["schema"], 1);
    assert_eq!(report["pass"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 12);

    let o = qone(&["verify", "qbeta", "--suite-tol", "1e-30", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = qone(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_heine_three_rows_per_point() {
    let o = qone(&["verify", "heine", "--trials", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let fixture_rows = text.lines().filter(|l| l.contains("fixture(0.400000,1.200000,1.300000,0.300000).r")).count();
    assert_eq!(fixture_rows, 3);
}

#[test]
fn verify_fixture_override() {
    let dir = std::env::temp_dir().join(format!("qone-fixtures-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fixtures.json");
    std::fs::write(&path, r#"{"qbeta": {"alpha": 0.3, "beta": 1.1}}"#).unwrap();
    let o = qone(&["verify", "qbeta", "--trials", "1", "--fixtures", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&o);
    assert_eq!(report["fixtures"]["qbeta"]["alpha"], 0.3);
    std::fs::write(&path, r#"{"qbeta": {"alpha": "x"}}"#).unwrap();
    assert_eq!(qone(&["verify", "qbeta", "--fixtures", path.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_all_is_byte_reproducible() {
    let a = qone(&["verify", "all", "--seed", "7"]);
    let b = qone(&["verify", "all", "--seed", "7", "--threads", "1"]);
    let c = qone(&["verify", "all", "--seed", "7", "--threads", "3"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}
