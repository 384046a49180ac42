//! Comparison against values computed independently with mpmath q-series and
//! scipy quadrature (see tests/oracle/oracle.py), stored in tests/fixtures/oracle.json.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use qone_core::cocycle::JordanPochhammerWeight;
use qone_core::doublesine::AngleEvaluator;
use qone_core::pairing::{det_pairing_matrix, pair, qbeta_problem};
use qone_core::qhyper::{psi, HGParams};
use serde_json::Value;

fn oracle() -> Value {
    let text = include_str!("fixtures/oracle.json");
    serde_json::from_str(text).expect("oracle fixture parses")
}

fn cx(v: &Value) -> Complex64 {
    Complex64::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn angle_values() {
    let o = oracle();
    let entries = o["angle"].as_array().unwrap();
    assert_eq!(entries.len(), 18);
    for e in entries {
        let omega = match e["omega"].as_str().unwrap() {
            "inv_sqrt2" => 1.0 / SQRT_2,
            "sqrt2" => SQRT_2,
            "sqrt2_over_16" => SQRT_2 / 16.0,
            other => panic!("unknown modulus {other}"),
        };
        let ev = AngleEvaluator::from_omega(omega).unwrap();
        let x = cx(&e["x"]);
        let want = cx(&e["value"]);
        let got = ev.angle(x).unwrap();
        assert!(rel(got, want) < 1e-11, "ω={omega} x={x}: {got} vs {want}");
    }
}

#[test]
fn qbeta_integral() {
    let o = oracle();
    let q = &o["qbeta"];
    let ev = AngleEvaluator::from_omega(1.0 / SQRT_2).unwrap();
    let got = pair(&qbeta_problem(&ev, c(f(&q["alpha"])), c(f(&q["beta"])), 1e-10).unwrap()).unwrap().value;
    let want = cx(&q["numeric"]);
    assert!(rel(got, want) < 1e-9, "{got} vs {want}");
}

#[test]
fn psi_integral() {
    let o = oracle();
    let p = &o["psi"];
    let ev = AngleEvaluator::from_omega(1.0 / SQRT_2).unwrap();
    let hg = HGParams::real(&ev, f(&p["alpha"]), f(&p["beta"]), f(&p["gamma"]), f(&p["x"]));
    let got = psi(&hg, 1e-10).unwrap().value;
    let want = cx(&p["value"]);
    assert!(rel(got, want) < 1e-9, "{got} vs {want}");
}

#[test]
fn determinant_2x2() {
    let o = oracle();
    let d = &o["det2"];
    let ev = AngleEvaluator::from_omega(1.0 / SQRT_2).unwrap();
    let list = |v: &Value| v.as_array().unwrap().iter().map(|g| c(f(g))).collect::<Vec<_>>();
    let jp = JordanPochhammerWeight::new(ev, c(f(&d["alpha"])), list(&d["gammas"]), list(&d["gamma_primes"])).unwrap();
    let r = det_pairing_matrix(&jp, 1e-10).unwrap();
    for (j, row) in d["matrix"].as_array().unwrap().iter().enumerate() {
        for (k, entry) in row.as_array().unwrap().iter().enumerate() {
            let want = cx(entry);
            assert!(rel(r.matrix[j][k], want) < 1e-9, "entry ({j},{k}): {} vs {want}", r.matrix[j][k]);
        }
    }
    let want = cx(&d["det"]);
    assert!(rel(r.det, want) < 1e-9, "{} vs {want}", r.det);
    // The corrected closed form agrees with the independent determinant.
    assert!(rel(r.closed_form, want) < 1e-9, "{} vs {want}", r.closed_form);
}
