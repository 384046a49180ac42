//! Little q-Jacobi polynomials at |q| = 1 and their orthogonality.
//!
//! p_n^{(a,b)}(t) = φ(q^{−n}, q^{a+b+n+1}, q^{a+1}; qt), a polynomial of degree n.
//! The family p_n^{(α−1,β−1)} is orthogonal for the q-Beta kernel
//! q^{αz}⟨z+W⟩/⟨z+β⟩, and the Gram entries reduce to the algebraic identity
//!
//! ```text
//! Σ_k A_k ∏_{j<k}(1−q^{α+j})/(1−q^{α+β+j}) = δ_{mn} (1−q^{α+β−1})/(1−q^{α+β+2n−1})
//!                                            · (q)_n(q^β)_n/((q^{α+β−1})_n(q^α)_n) · q^{nα}
//! ```
//!
//! where Σ_k A_k t^k = p_m p_n.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{CocycleElement, Laurent, Side};
use crate::doublesine::AngleEvaluator;
use crate::error::{Error, Result};
use crate::pairing::{pair, qbeta_closed_form, qbeta_problem, PairingProblem, Residual};
use crate::qcore::{poch, ModulusParameters};
use crate::qhyper::{psi_residue_corrected_detailed, HGParams};

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Dense polynomial in t; `coeffs[k]` multiplies t^k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QPolynomial {
    pub coeffs: Vec<Complex64>,
}

impl QPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    pub fn mul(&self, other: &QPolynomial) -> QPolynomial {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        QPolynomial { coeffs }
    }

    pub fn to_laurent(&self) -> Laurent {
        Laurent::from_coeffs(0, &self.coeffs)
    }
}

/// Coefficients of p_n^{(a,b)}(t): the t^k coefficient is
/// q^k ∏_{j<k} (1−q^{−n+j})(1−q^{a+b+n+1+j})/((1−q^{j+1})(1−q^{a+1+j})).
pub fn little_jacobi(n: u32, a: Complex64, b: Complex64, m: &ModulusParameters) -> Result<QPolynomial> {
    let q = m.q;
    let qb2 = m.q_pow(a + b + n as f64 + 1.0);
    let qa1 = m.q_pow(a + 1.0);
    let mut coeffs = vec![one()];
    let mut c = one();
    for j in 0..n as i32 {
        let qj = q.powi(j);
        let den = (one() - q * qj) * (one() - qa1 * qj);
        if den.norm() < 1e-14 {
            return Err(Error::PochhammerPole { j: j as i64 });
        }
        c *= q * (one() - q.powi(j - n as i32)) * (one() - qb2 * qj) / den;
        coeffs.push(c);
    }
    Ok(QPolynomial { coeffs })
}

/// A_k^{m,n}: coefficients of p_m^{(a,b)} p_n^{(a,b)}.
pub fn product_coeffs(mi: u32, ni: u32, a: Complex64, b: Complex64, m: &ModulusParameters) -> Result<Vec<Complex64>> {
    Ok(little_jacobi(mi, a, b, m)?.mul(&little_jacobi(ni, a, b, m)?).coeffs)
}

/// The right side of the algebraic identity without the δ, for the pair (α, β).
fn norm_factor(n: u32, alpha: Complex64, beta: Complex64, m: &ModulusParameters) -> Result<Complex64> {
    let q = m.q;
    let n = n as i64;
    let s = alpha + beta;
    let num = (one() - m.q_pow(s - 1.0)) * poch(q, q, n)? * poch(m.q_pow(beta), q, n)?;
    let den = (one() - m.q_pow(s + 2.0 * n as f64 - 1.0)) * poch(m.q_pow(s - 1.0), q, n)? * poch(m.q_pow(alpha), q, n)?;
    if den.norm() < 1e-300 {
        return Err(Error::Degenerate("vanishing denominator in the norm".into()));
    }
    Ok(num / den * m.q_pow(alpha * n as f64))
}

/// ∏_{j<k}(1−q^{α+j})/(1−q^{α+β+j}) for k = 0..=len−1.
fn beta_ratios(len: usize, alpha: Complex64, beta: Complex64, m: &ModulusParameters) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(len);
    let mut r = one();
    for j in 0..len {
        out.push(r);
        let den = one() - m.q_pow(alpha + beta + j as f64);
        if den.norm() < 1e-14 {
            return Err(Error::PochhammerPole { j: j as i64 });
        }
        r *= (one() - m.q_pow(alpha + j as f64)) / den;
    }
    Ok(out)
}

/// LHS − RHS of the algebraic identity for p^{(α−1,β−1)}; scaled by |RHS| when m = n.
pub fn identity29_residual(mi: u32, ni: u32, alpha: Complex64, beta: Complex64, m: &ModulusParameters) -> Result<Residual> {
    let a = product_coeffs(mi, ni, alpha - 1.0, beta - 1.0, m)?;
    let ratios = beta_ratios(a.len(), alpha, beta, m)?;
    let lhs: Complex64 = a.iter().zip(&ratios).map(|(x, r)| x * r).sum();
    let rhs = if mi == ni { norm_factor(ni, alpha, beta, m)? } else { Complex64::new(0.0, 0.0) };
    // Scaled by the largest summand, the size of the rounding floor of the sum.
    let scale = a.iter().zip(&ratios).map(|(x, r)| (x * r).norm()).fold(rhs.norm(), f64::max);
    Ok(Residual::new(lhs - rhs, scale))
}

/// c_n = ⟨1⟩⟨α+β⟩/(⟨α⟩⟨β⟩) times the norm factor.
pub fn c_n(n: u32, alpha: Complex64, beta: Complex64, eval: &AngleEvaluator) -> Result<Complex64> {
    Ok(qbeta_closed_form(eval, alpha, beta)? * norm_factor(n, alpha, beta, eval.modulus())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalityEntry {
    /// Σ_k A_k × (q-Beta pairing at α+k).
    pub termwise: Complex64,
    /// One pairing of the full product polynomial.
    pub direct: Complex64,
    /// ⟨1⟩⟨α+β⟩/(⟨α⟩⟨β⟩) Σ_k A_k ∏(1−q^{α+j})/(1−q^{α+β+j}).
    pub algebraic: Complex64,
    /// δ_{mn} c_n.
    pub expected: Complex64,
    /// Σ_k |A_k| × quadrature error bound, a bound on the termwise error.
    pub error_bound: f64,
}

/// ∫ q^{αz}⟨z+W⟩/⟨z+β⟩ p_m p_n(t) dz with p = p^{(α−1,β−1)}, by both routes.
pub fn orthogonality_pair(mi: u32, ni: u32, alpha: Complex64, beta: Complex64, eval: &AngleEvaluator, tol: f64) -> Result<OrthogonalityEntry> {
    let m = eval.modulus();
    let a = product_coeffs(mi, ni, alpha - 1.0, beta - 1.0, m)?;
    let terms: Vec<Result<(Complex64, f64)>> = (0..a.len())
        .into_par_iter()
        .map(|k| {
            let p = qbeta_problem(eval, alpha + k as f64, beta, tol)?;
            pair(&p).map(|o| (o.value, o.quad.error_bound())).map_err(|e| Error::infeasible(format!("q-Beta term k={k}"), e))
        })
        .collect();
    let mut termwise = Complex64::new(0.0, 0.0);
    let mut error_bound = 0.0;
    for (ak, t) in a.iter().zip(terms) {
        let (v, err) = t?;
        termwise += ak * v;
        error_bound += ak.norm() * err;
    }

    let base = qbeta_problem(eval, alpha, beta, tol)?;
    let poly = QPolynomial { coeffs: a.clone() };
    let mut phi = CocycleElement::basis(Side::Q, Complex64::new(0.0, 0.0));
    phi.numerator = poly.to_laurent();
    let direct = pair(&PairingProblem::new(base.jp.clone(), phi, base.phi_tilde.clone(), tol))
        .map_err(|e| Error::infeasible("direct product pairing", e))?
        .value;

    let ratios = beta_ratios(a.len(), alpha, beta, m)?;
    let algebraic = qbeta_closed_form(eval, alpha, beta)? * a.iter().zip(&ratios).map(|(x, r)| x * r).sum::<Complex64>();
    let expected = if mi == ni { c_n(ni, alpha, beta, eval)? } else { Complex64::new(0.0, 0.0) };
    Ok(OrthogonalityEntry { termwise, direct, algebraic, expected, error_bound })
}

/// Gram matrix entries for 0 ≤ m, n ≤ `max_degree`, row-major.
pub fn gram_matrix(max_degree: u32, alpha: Complex64, beta: Complex64, eval: &AngleEvaluator, tol: f64) -> Result<Vec<Vec<OrthogonalityEntry>>> {
    let d = max_degree as usize + 1;
    let flat: Vec<Result<OrthogonalityEntry>> = (0..d * d)
        .into_par_iter()
        .map(|i| orthogonality_pair((i / d) as u32, (i % d) as u32, alpha, beta, eval, tol))
        .collect();
    let mut rows = Vec::with_capacity(d);
    let mut it = flat.into_iter();
    for _ in 0..d {
        rows.push(it.by_ref().take(d).collect::<Result<Vec<_>>>()?);
    }
    Ok(rows)
}

/// p_n^{(a,b)}(q^x) against Ψ(−n, a+b+n+1, a+1; x+1) from the residue-corrected limit.
pub fn jacobi_limit_residual(n: u32, a: Complex64, b: Complex64, x: Complex64, eval: &AngleEvaluator, tol: f64) -> Result<Residual> {
    let m = eval.modulus();
    let poly = little_jacobi(n, a, b, m)?.eval(m.q_pow(x));
    let p = HGParams::new(eval.clone(), Complex64::new(-(n as f64), 0.0), a + b + n as f64 + 1.0, a + 1.0, x + 1.0);
    let (psi, quad) = psi_residue_corrected_detailed(n, &p, tol)?;
    Ok(Residual::new(psi - poly, poly.norm()).with_quad(quad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn low_degree_polynomials() {
        let m = ModulusParameters::new(FRAC_1_SQRT_2).unwrap();
        assert_eq!(little_jacobi(0, c(0.3), c(0.7), &m).unwrap().coeffs, vec![one()]);
        let p1 = little_jacobi(1, c(0.3), c(0.7), &m).unwrap();
        let want = -(one() - m.q_pow(c(3.0))) / (one() - m.q_pow(c(1.3)));
        assert!((p1.coeffs[1] - want).norm() < 1e-14);
    }

    #[test]
    fn product_is_symmetric() {
        let m = ModulusParameters::new(FRAC_1_SQRT_2).unwrap();
        let a = product_coeffs(1, 2, c(0.3), c(0.7), &m).unwrap();
        let b = product_coeffs(2, 1, c(0.3), c(0.7), &m).unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn algebraic_identity() {
        let m = ModulusParameters::new(FRAC_1_SQRT_2).unwrap();
        for mi in 0..4 {
            for ni in 0..4 {
                let r = identity29_residual(mi, ni, c(0.3), c(6.0), &m).unwrap();
                assert!(r.relative() < 1e-12, "m={mi} n={ni}: {r:?}");
            }
        }
    }

    #[test]
    fn limit_gives_polynomial() {
        let ev = AngleEvaluator::from_omega(FRAC_1_SQRT_2).unwrap();
        let r = jacobi_limit_residual(1, c(0.3), c(0.2), c(0.3), &ev, 1e-11).unwrap();
        assert!(r.relative() < 1e-8, "{r:?}");
    }
}
