//! The pairing ∫_C Φ(z) φ(t) φ̃(T) dz and the results built on it.
//!
//! Denominator factors of φ and φ̃ are absorbed into Φ by moving offsets:
//! (c′_j t; q)_ℓ′ sends γ′_j to γ′_j + ℓ′, (c_j q^{−ℓ} t; q)_ℓ sends γ_j to
//! γ_j − ℓ, and on the dual side the shifts are ℓ/ω. A monomial t^m T^k moves
//! α to α + m + k/ω. The integral is then a sum of plain weight integrals,
//! each taken along one vertical line separating the zeros of the
//! denominators (extending left) from the poles of the numerators (extending
//! right).
//!
//! For one monomial the integrand decays like e^{−2πω Re(α) |y|} as y → +∞
//! and like e^{−2πω (U − Re α) |y|} as y → −∞, where
//! U = Σ Re(γ′_eff − γ_eff). Convergence therefore needs 0 < Re α < U.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{b_chi, b_tilde_chi, basis_elements, coboundary_generator, CocycleElement, FactorKind, JordanPochhammerWeight, Laurent, Side};
use crate::contour::{find_separating_offset, integrate_vertical, ContourSpec, QuadSummary, QuadratureResult};
use crate::doublesine::{sigma, AngleEvaluator};
use crate::error::{Error, Result};
use crate::qcore::I;

/// Open interval of admissible Re α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lower: f64,
    pub upper: f64,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }

    /// Distance from x to the nearer edge; negative outside.
    pub fn margin(&self, x: f64) -> f64 {
        (x - self.lower).min(self.upper - x)
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideWindow { lower: self.lower, upper: self.upper, value: x })
        }
    }
}

/// Weight with all denominator factors absorbed, plus the monomials left over.
#[derive(Debug, Clone)]
pub struct AbsorbedPairing {
    pub weight: JordanPochhammerWeight,
    /// (coefficient, shift of α) for every monomial t^m T^k, shift = m + k/ω.
    pub terms: Vec<(Complex64, f64)>,
}

impl AbsorbedPairing {
    /// Window for Re α of the original weight.
    pub fn window(&self) -> Window {
        let u: f64 = self.weight.gamma_primes.iter().map(|g| g.re).sum::<f64>()
            - self.weight.gammas.iter().map(|g| g.re).sum::<f64>();
        let lo = self.terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
        let hi = self.terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        if self.terms.is_empty() {
            return Window { lower: f64::NEG_INFINITY, upper: f64::INFINITY };
        }
        Window { lower: -lo, upper: u - hi }
    }

    /// (max Re of the left families, min Re of the right families).
    pub fn gap(&self) -> (f64, f64) {
        let w = self.weight.eval.w_big();
        let left = self.weight.gammas.iter().map(|g| -g.re).fold(f64::NEG_INFINITY, f64::max);
        let right = self.weight.gamma_primes.iter().map(|g| w - g.re).fold(f64::INFINITY, f64::min);
        (left, right)
    }

    /// Σ coef · Φ_eff(z) e^{2πiω·shift·z}.
    pub fn integrand(&self, z: Complex64) -> Result<Complex64> {
        let l = self.weight.log_phi(z)?;
        let omega = self.weight.modulus().omega;
        Ok(self.terms.iter().map(|(c, s)| c * (l + 2.0 * PI * I * omega * s * z).exp()).sum())
    }
}

/// Rewrites ∫Φ φ φ̃ as a sum of plain weight integrals.
pub fn absorb(jp: &JordanPochhammerWeight, phi: &CocycleElement, phi_tilde: &CocycleElement) -> Result<AbsorbedPairing> {
    if phi.side != Side::Q || phi_tilde.side != Side::Dual {
        return Err(Error::Domain("pairing expects a q-side element and a dual-side element".into()));
    }
    let m = *jp.modulus();
    let mut weight = jp.clone();
    for e in [phi, phi_tilde] {
        let step = e.side.step(&m);
        let mut used_left = vec![false; jp.n()];
        let mut used_right = vec![false; jp.n()];
        for f in &e.factors {
            let j = jp.match_anchor(e.side, f.kind, f.gamma)?;
            let used = match f.kind {
                FactorKind::Left => &mut used_left[j],
                FactorKind::Right => &mut used_right[j],
            };
            if *used {
                return Err(Error::NotInSpace("two denominator factors on the same offset".into()));
            }
            *used = true;
            let shift = f.len as f64 * step;
            match f.kind {
                FactorKind::Left => weight.gammas[j] -= shift,
                FactorKind::Right => weight.gamma_primes[j] += shift,
            }
        }
    }
    let mut terms = Vec::new();
    for (mq, cq) in phi.numerator.terms() {
        for (md, cd) in phi_tilde.numerator.terms() {
            terms.push((cq * cd, mq as f64 + md as f64 / m.omega));
        }
    }
    Ok(AbsorbedPairing { weight, terms })
}

/// Window for Re α in which ∫Φ φ φ̃ converges.
pub fn convergence_window(jp: &JordanPochhammerWeight, phi: &CocycleElement, phi_tilde: &CocycleElement) -> Result<Window> {
    Ok(absorb(jp, phi, phi_tilde)?.window())
}

#[derive(Debug, Clone)]
pub struct PairingProblem {
    pub jp: JordanPochhammerWeight,
    pub phi: CocycleElement,
    pub phi_tilde: CocycleElement,
    pub tol: f64,
}

impl PairingProblem {
    pub fn new(jp: JordanPochhammerWeight, phi: CocycleElement, phi_tilde: CocycleElement, tol: f64) -> Self {
        PairingProblem { jp, phi, phi_tilde, tol }
    }

    /// Plain weight integral ∫Φ dz.
    pub fn plain(jp: JordanPochhammerWeight, tol: f64) -> Self {
        PairingProblem::new(jp, CocycleElement::one(Side::Q), CocycleElement::one(Side::Dual), tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingOutcome {
    pub value: Complex64,
    pub rho: f64,
    pub window: Window,
    pub quad: QuadratureResult,
}

/// Checks window and separation, returning the absorbed form and the midpoint line.
pub fn prepare(problem: &PairingProblem) -> Result<(AbsorbedPairing, f64)> {
    let abs = absorb(&problem.jp, &problem.phi, &problem.phi_tilde)?;
    abs.window().check(problem.jp.alpha.re)?;
    let (left, right) = abs.gap();
    let rho = find_separating_offset(left, right)?;
    Ok((abs, rho))
}

/// Distance of the problem from infeasibility: the smaller of the window margin
/// of Re α and the half-width of the gap for the separating line.
pub fn feasibility_margin(problem: &PairingProblem) -> Result<f64> {
    let (abs, _) = prepare(problem)?;
    let (left, right) = abs.gap();
    Ok(abs.window().margin(problem.jp.alpha.re).min(0.5 * (right - left)))
}

/// The same pairing at `tol` and at `tol · 1e-3` on the same line.
///
/// The finer run bisects more panels and marches further out, so the difference
/// measures how honest the coarse error estimate is.
pub fn refinement_pair(problem: &PairingProblem) -> Result<(PairingOutcome, PairingOutcome)> {
    let coarse = pair(problem)?;
    let mut fine = problem.clone();
    fine.tol *= 1e-3;
    let fine = pair_on_line(&fine, coarse.rho)?;
    Ok((coarse, fine))
}

pub fn pair(problem: &PairingProblem) -> Result<PairingOutcome> {
    let (abs, rho) = prepare(problem)?;
    pair_absorbed(&abs, rho, problem.tol)
}

/// Same integral on a caller-chosen line, which must lie strictly inside the gap.
pub fn pair_on_line(problem: &PairingProblem, rho: f64) -> Result<PairingOutcome> {
    let (abs, _) = prepare(problem)?;
    let (left, right) = abs.gap();
    if !(left < rho && rho < right) {
        return Err(Error::NoSeparatingLine { left_max: left.max(rho), right_min: right.min(rho) });
    }
    pair_absorbed(&abs, rho, problem.tol)
}

fn pair_absorbed(abs: &AbsorbedPairing, rho: f64, tol: f64) -> Result<PairingOutcome> {
    let window = abs.window();
    if abs.terms.is_empty() {
        let quad = QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            abs_error: 0.0,
            truncation: 0.0,
            scale: 0.0,
            panels: 0,
            evaluations: 0,
            y_lower: 0.0,
            y_upper: 0.0,
            converged: true,
        };
        return Ok(PairingOutcome { value: quad.value, rho, window, quad });
    }
    let spec = ContourSpec::new(rho, tol);
    let quad = integrate_vertical(|z| abs.integrand(z), &spec)?;
    Ok(PairingOutcome { value: quad.value, rho, window, quad })
}

/// ⟨1⟩⟨α+β⟩/(⟨α⟩⟨β⟩).
pub fn qbeta_closed_form(eval: &AngleEvaluator, alpha: Complex64, beta: Complex64) -> Result<Complex64> {
    let den = eval.angle(alpha)? * eval.angle(beta)?;
    if den.norm() == 0.0 {
        return Err(Error::Degenerate("⟨α⟩⟨β⟩ vanishes".into()));
    }
    Ok(eval.angle_one() * eval.angle(alpha + beta)? / den)
}

/// The q-Beta pairing ∫ e^{2πiωαz} ⟨z⟩/⟨z+β⟩ · 1/(1−t) · 1/(1−T) dz.
pub fn qbeta_problem(eval: &AngleEvaluator, alpha: Complex64, beta: Complex64, tol: f64) -> Result<PairingProblem> {
    let zero = Complex64::new(0.0, 0.0);
    let jp = JordanPochhammerWeight::new(eval.clone(), alpha, vec![beta], vec![zero])?;
    Ok(PairingProblem::new(jp, CocycleElement::basis(Side::Q, zero), CocycleElement::basis(Side::Dual, zero), tol))
}

/// Closed form for det(∫Φ φ_j φ̃_k) in the basis φ_j = 1/(1−c′_j t), φ̃_k = 1/(1−C′_k T).
///
/// ⟨1⟩^n e^{−2πiωαΣγ′} ⟨α+Σγ−Σγ′⟩ / (⟨α⟩ ∏_{j,k}⟨γ_j−γ′_k⟩)
/// × ∏_{j<k} (1−e^{2πiωd})(1−e^{2πid}) σ(−d),  d = γ′_j − γ′_k.
pub fn det_closed_form(jp: &JordanPochhammerWeight) -> Result<Complex64> {
    let ev = &jp.eval;
    let m = jp.modulus();
    let n = jp.n();
    let sg: Complex64 = jp.gammas.iter().sum();
    let sgp: Complex64 = jp.gamma_primes.iter().sum();
    let mut den = ev.angle(jp.alpha)?;
    for g in &jp.gammas {
        for gp in &jp.gamma_primes {
            den *= ev.angle(g - gp)?;
        }
    }
    if den.norm() == 0.0 {
        return Err(Error::Degenerate("⟨α⟩ or some ⟨γ_j − γ′_k⟩ vanishes".into()));
    }
    let mut v = ev.angle_one().powi(n as i32) * (-2.0 * PI * I * m.omega * jp.alpha * sgp).exp()
        * ev.angle(jp.alpha + sg - sgp)?
        / den;
    let one = Complex64::new(1.0, 0.0);
    for j in 0..n {
        for k in (j + 1)..n {
            let d = jp.gamma_primes[j] - jp.gamma_primes[k];
            v *= (one - m.torus_q(d)) * (one - m.torus_big_q(d)) * sigma(m, -d);
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct DetResult {
    pub matrix: Vec<Vec<Complex64>>,
    pub det: Complex64,
    pub closed_form: Complex64,
    /// Entry-wise quadrature results, row-major.
    pub quads: Vec<QuadratureResult>,
}

impl DetResult {
    pub fn relative_error(&self) -> f64 {
        (self.det - self.closed_form).norm() / self.closed_form.norm()
    }
}

/// Pairing matrix in the basis 1/(1−c′_j t), 1/(1−C′_k T), its determinant and the closed form.
pub fn det_pairing_matrix(jp: &JordanPochhammerWeight, tol: f64) -> Result<DetResult> {
    let n = jp.n();
    if n == 0 {
        return Err(Error::Domain("determinant needs n ≥ 1".into()));
    }
    let (qb, db) = basis_elements(jp);
    let entries: Vec<Result<PairingOutcome>> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            let p = PairingProblem::new(jp.clone(), qb[j].clone(), db[k].clone(), tol);
            pair(&p).map_err(|e| Error::infeasible(format!("pairing entry ({j}, {k})"), e))
        })
        .collect();
    let mut quads = Vec::with_capacity(n * n);
    let mut flat = Vec::with_capacity(n * n);
    for e in entries {
        let e = e?;
        quads.push(e.quad);
        flat.push(e.value);
    }
    let mat = DMatrix::from_row_slice(n, n, &flat);
    let matrix = (0..n).map(|j| (0..n).map(|k| mat[(j, k)]).collect()).collect();
    Ok(DetResult { matrix, det: mat.determinant(), closed_form: det_closed_form(jp)?, quads })
}

/// Residual of a difference equation in α together with the scale it should be compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: Complex64,
    pub scale: f64,
    pub quad: QuadSummary,
}

impl Residual {
    pub fn new(value: Complex64, scale: f64) -> Self {
        Residual { value, scale, quad: QuadSummary::default() }
    }

    pub fn with_quad(mut self, quad: QuadSummary) -> Self {
        self.quad = quad;
        self
    }

    pub fn zero() -> Self {
        Residual::new(Complex64::new(0.0, 0.0), 0.0)
    }

    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.value.norm()
        } else {
            self.value.norm() / self.scale
        }
    }
}

/// Σ_k coef_k · Ψ(α + k/step) with Ψ(α') = ∫Φ_{α'} φ̃ dz, and Σ|coef_k Ψ|.
fn combine(jp: &JordanPochhammerWeight, phi_tilde: &CocycleElement, poly: &Laurent, dual: bool, tol: f64) -> Result<Residual> {
    let m = jp.modulus();
    let terms: Vec<(i32, Complex64)> = poly.terms().collect();
    let values: Vec<Result<PairingOutcome>> = terms
        .par_iter()
        .map(|(k, _)| {
            let shift = if dual { *k as f64 / m.omega } else { *k as f64 };
            let p = PairingProblem::new(jp.with_alpha(jp.alpha + shift), CocycleElement::one(Side::Q), phi_tilde.clone(), tol);
            pair(&p).map_err(|e| Error::infeasible(format!("pairing at α + {shift}"), e))
        })
        .collect();
    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let mut quad = QuadSummary::default();
    for ((_, c), v) in terms.iter().zip(values) {
        let v = v?;
        value += c * v.value;
        scale += (c * v.value).norm();
        quad = quad.merge(QuadSummary::of(&v.quad));
    }
    Ok(Residual::new(value, scale).with_quad(quad))
}

/// ∫Φ · (ψ − b_χ ψ(base^χ x)), paired with 1 on the other side.
///
/// The scale is ∫|integrand||dz|, so the relative residual measures cancellation
/// against the size of the integrand itself.
pub fn coboundary_pairing(jp: &JordanPochhammerWeight, psi: &CocycleElement, chi: i32, tol: f64) -> Result<Residual> {
    let e = coboundary_generator(psi, jp, chi)?;
    let problem = match psi.side {
        Side::Q => PairingProblem::new(jp.clone(), e, CocycleElement::one(Side::Dual), tol),
        Side::Dual => PairingProblem::new(jp.clone(), CocycleElement::one(Side::Q), e, tol),
    };
    let o = pair(&problem)?;
    Ok(Residual::new(o.value, o.quad.scale).with_quad(QuadSummary::of(&o.quad)))
}

/// {b⁻_χ(q^{−χ}D) − q^{χα} b⁺_χ(D)} Ψ(α | φ̃), where D shifts α by 1.
pub fn mellin_sato_residual(jp: &JordanPochhammerWeight, phi_tilde: &CocycleElement, chi: i32, tol: f64) -> Result<Residual> {
    if chi == 0 {
        return Ok(Residual::zero());
    }
    let b = b_chi(jp, chi);
    let qinv = jp.modulus().q.powi(-chi);
    let poly = b.minus.dilate(qinv).sub(&b.plus.scale(b.prefactor));
    combine(jp, phi_tilde, &poly, false, tol)
}

/// The dual statement: shifts by 1/ω and Q in place of 1 and q, paired with φ = 1.
pub fn mellin_sato_residual_dual(jp: &JordanPochhammerWeight, chi: i32, tol: f64) -> Result<Residual> {
    if chi == 0 {
        return Ok(Residual::zero());
    }
    let b = b_tilde_chi(jp, chi);
    let qinv = jp.modulus().big_q.powi(-chi);
    let poly = b.minus.dilate(qinv).sub(&b.plus.scale(b.prefactor));
    combine(jp, &CocycleElement::one(Side::Dual), &poly, true, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ev() -> AngleEvaluator {
        AngleEvaluator::from_omega(FRAC_1_SQRT_2).unwrap()
    }

    #[test]
    fn qbeta_window_and_gap() {
        let e = ev();
        let p = qbeta_problem(&e, c(0.4, 0.0), c(0.9, 0.0), 1e-10).unwrap();
        let abs = absorb(&p.jp, &p.phi, &p.phi_tilde).unwrap();
        let w = abs.window();
        assert!((w.lower - 0.0).abs() < 1e-15);
        assert!((w.upper - (e.w_big() - 0.9)).abs() < 1e-12);
        let (l, r) = abs.gap();
        assert!((l + 0.9).abs() < 1e-15 && r.abs() < 1e-12);
    }

    #[test]
    fn qbeta_matches_closed_form() {
        let e = ev();
        let p = qbeta_problem(&e, c(0.4, 0.0), c(0.9, 0.0), 1e-11).unwrap();
        let out = pair(&p).unwrap();
        let want = qbeta_closed_form(&e, c(0.4, 0.0), c(0.9, 0.0)).unwrap();
        assert!((out.value - want).norm() < 1e-9 * want.norm(), "{} vs {}", out.value, want);
        let other = pair_on_line(&p, -0.2).unwrap();
        assert!((other.value - out.value).norm() < 1e-9 * want.norm());
        assert!(pair_on_line(&p, 0.1).is_err());
    }

    #[test]
    fn outside_window_is_reported() {
        let e = ev();
        let p = qbeta_problem(&e, c(-0.1, 0.0), c(0.9, 0.0), 1e-10).unwrap();
        assert!(matches!(pair(&p), Err(Error::OutsideWindow { .. })));
    }

    #[test]
    fn n0_has_no_window() {
        let jp = JordanPochhammerWeight::new(ev(), c(0.3, 0.0), vec![], vec![]).unwrap();
        assert!(matches!(pair(&PairingProblem::plain(jp.clone(), 1e-8)), Err(Error::OutsideWindow { .. })));
        let r = mellin_sato_residual(&jp, &CocycleElement::one(Side::Dual), 0, 1e-8).unwrap();
        assert_eq!(r.value, c(0.0, 0.0));
    }
}
