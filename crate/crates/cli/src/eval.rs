//! Point evaluation shared by `eval` and `sweep`.

use anyhow::{anyhow, bail, Result};
use clap::ValueEnum;
use num_complex::Complex64;
use qone_core::cocycle::JordanPochhammerWeight;
use qone_core::doublesine::{sigma, AngleEvaluator};
use qone_core::jacobi::{little_jacobi, orthogonality_pair};
use qone_core::pairing::{det_closed_form, det_pairing_matrix, pair, qbeta_closed_form, qbeta_problem};
use qone_core::qhyper::{difference_equation_residual, psi, HGParams};
use qone_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Function {
    Angle,
    Sigma,
    Psi,
    Qbeta,
    Det,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Diffeq,
}

/// Parameter values for one evaluation.
#[derive(Debug, Clone, Default)]
pub struct Params {
    pub omega: f64,
    pub alpha: Option<Complex64>,
    pub beta: Option<Complex64>,
    pub gamma: Option<Complex64>,
    pub x: Option<Complex64>,
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub gammas: Vec<f64>,
    pub gamma_primes: Vec<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Value {
    pub value: Complex64,
    pub abs_err: f64,
}

/// Usage errors are distinguished from evaluation errors for the exit code.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn need<T: Copy>(v: Option<T>, func: &str, flag: &str) -> Result<T> {
    v.ok_or_else(|| Usage(format!("{func} requires --{flag}")).into())
}

/// Rounding-level error estimate for closed-form values.
fn rounding(v: Complex64, growth: f64) -> f64 {
    4.0 * f64::EPSILON * v.norm() * growth.max(1.0)
}

/// Names the offending parameter when a window check fails.
pub fn diagnose(err: Error, param: &str) -> anyhow::Error {
    fn root(e: &Error) -> &Error {
        match e {
            Error::Infeasible { source, .. } => root(source),
            e => e,
        }
    }
    match root(&err) {
        Error::OutsideWindow { lower, upper, value } => {
            // Adding 0.0 turns −0 into 0.
            anyhow!("{param} outside convergence window ({}, {}): Re {param} = {value}", lower + 0.0, upper + 0.0)
        }
        _ => anyhow!(err),
    }
}

pub fn evaluate(func: Function, p: &Params, tol: f64) -> Result<Value> {
    let ev = AngleEvaluator::from_omega(p.omega)?;
    match func {
        Function::Angle => {
            let x = need(p.x, "angle", "x")?;
            let v = ev.angle(x)?;
            // A posteriori check against the q-shift relation.
            let m = ev.modulus();
            let shift = ev.angle(x + 1.0).map(|u| (u * (1.0 - m.torus_q(x)) - v).norm()).unwrap_or(0.0);
            Ok(Value { value: v, abs_err: shift.max(rounding(v, 1.0)) })
        }
        Function::Sigma => {
            let x = need(p.x, "sigma", "x")?;
            let v = sigma(ev.modulus(), x);
            Ok(Value { value: v, abs_err: rounding(v, x.norm_sqr()) })
        }
        Function::Psi => {
            let hg = HGParams::new(
                ev,
                need(p.alpha, "psi", "alpha")?,
                need(p.beta, "psi", "beta")?,
                need(p.gamma, "psi", "gamma")?,
                need(p.x, "psi", "x")?,
            );
            let v = psi(&hg, tol).map_err(|e| diagnose(e, "x"))?;
            Ok(Value { value: v.value, abs_err: v.error_bound() })
        }
        Function::Qbeta => {
            let (a, b) = (need(p.alpha, "qbeta", "alpha")?, need(p.beta, "qbeta", "beta")?);
            if p.exact {
                let v = qbeta_closed_form(&ev, a, b)?;
                return Ok(Value { value: v, abs_err: rounding(v, 1.0) });
            }
            let o = qbeta_problem(&ev, a, b, tol).and_then(|pr| pair(&pr)).map_err(|e| diagnose(e, "alpha"))?;
            Ok(Value { value: o.value, abs_err: o.quad.error_bound() })
        }
        Function::Det => {
            let a = need(p.alpha, "det", "alpha")?;
            if p.gammas.is_empty() || p.gammas.len() != p.gamma_primes.len() {
                bail!(Usage("det requires --gammas and --gamma-primes of equal, nonzero length".into()));
            }
            let c = |v: &Vec<f64>| v.iter().map(|g| Complex64::new(*g, 0.0)).collect();
            let jp = JordanPochhammerWeight::new(ev, a, c(&p.gammas), c(&p.gamma_primes))?;
            if p.exact {
                let v = det_closed_form(&jp)?;
                return Ok(Value { value: v, abs_err: rounding(v, 1.0) });
            }
            let d = det_pairing_matrix(&jp, tol).map_err(|e| diagnose(e, "alpha"))?;
            // First order: each entry's error relative to the entry, scaled by |det|.
            let rel: f64 = d.matrix.iter().flatten().zip(&d.quads).map(|(m, q)| q.error_bound() / m.norm()).sum();
            Ok(Value { value: d.det, abs_err: d.det.norm() * rel })
        }
        Function::Jacobi => {
            let n = need(p.n, "jacobi", "n")?;
            let (a, b) = (need(p.alpha, "jacobi", "alpha")?, need(p.beta, "jacobi", "beta")?);
            if let Some(mi) = p.m {
                // ⟨p_m, p_n⟩ for the q-Beta weight with exponents (α, β).
                let e = orthogonality_pair(mi, n, a, b, &ev, tol).map_err(|e| diagnose(e, "alpha"))?;
                return Ok(Value { value: e.termwise, abs_err: e.error_bound });
            }
            let x = need(p.x, "jacobi", "x")?;
            let poly = little_jacobi(n, a, b, ev.modulus())?;
            let v = poly.eval(ev.modulus().q_pow(x));
            let size: f64 = poly.coeffs.iter().map(|c| c.norm()).sum();
            Ok(Value { value: v, abs_err: rounding(Complex64::new(size, 0.0), n as f64 + 1.0) })
        }
    }
}

/// Relative residual of the three-term difference equation in x at a Ψ point.
pub fn check_residual(check: Check, p: &Params, tol: f64) -> Result<f64> {
    match check {
        Check::Diffeq => {
            let ev = AngleEvaluator::from_omega(p.omega)?;
            let hg = HGParams::new(
                ev,
                need(p.alpha, "diffeq", "alpha")?,
                need(p.beta, "diffeq", "beta")?,
                need(p.gamma, "diffeq", "gamma")?,
                need(p.x, "diffeq", "x")?,
            );
            Ok(difference_equation_residual(&hg, None, tol).map_err(|e| diagnose(e, "x"))?.relative())
        }
    }
}
