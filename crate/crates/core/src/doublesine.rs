//! The double sine angle ⟨x⟩ and its reflection factor σ.
//!
//! ⟨x⟩ is meromorphic with zeros at m + n/ω (m, n ≤ 0) and poles at
//! m + n/ω (m, n ≥ 1). It satisfies
//!
//! ```text
//! ⟨x+1⟩   = ⟨x⟩ / (1 − e^{2πiωx})
//! ⟨x+1/ω⟩ = ⟨x⟩ / (1 − e^{2πix})
//! ⟨x⟩⟨W−x⟩ = σ(x) = exp(πi((1+ω)x − ωx²)),   W = 1 + 1/ω
//! ```
//!
//! Inside the strip 0 < Re x < W it is computed from
//!
//! ```text
//! log⟨x⟩ = κ − ¼ ∫ e^{(W−2x)t} / (t sinh t sinh(t/ω)) dt,   κ = πi/4 + (πi/12)(ω + 1/ω)
//! ```
//!
//! with the integral taken along Im t = −(π/2)·min(1, ω), halfway between the
//! pole at t = 0 and the next pole below. The integrand is analytic in a strip
//! around that line and decays exponentially at both ends, so the trapezoid
//! rule converges geometrically. Arguments are first moved next to W/2 with the
//! shift relations, and points with Im x < 0 go through the reflection.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{log_one_minus_exp, LatticePoint, ModulusParameters, I};

/// Default distance below which a point counts as lying on a lattice.
pub const LATTICE_TOL: f64 = 1e-9;

/// Exponent of the trapezoid discretization error, e^{−2π d / h}.
const TRAPEZOID_EXPONENT: f64 = 48.0;
/// Tail cut-off exponent for the truncated trapezoid sum.
const TAIL_EXPONENT: f64 = 42.0;
/// Nodes between direct re-evaluations of the geometric recurrence.
const REANCHOR: usize = 32;

/// Position of a point relative to the zero and pole lattices of ⟨x⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatticeClass {
    Zero(LatticePoint),
    Pole(LatticePoint),
    Regular,
}

/// Evaluates ⟨x⟩ for a fixed modulus. Cloning is cheap.
#[derive(Clone)]
pub struct AngleEvaluator {
    modulus: ModulusParameters,
    /// Offset of the integration line below the real axis.
    line_offset: f64,
    lattice_tol: f64,
    kappa: Complex64,
    table: Arc<Table>,
}

struct Table {
    t0: Complex64,
    step: f64,
    weights: Vec<Complex64>,
}

impl fmt::Debug for AngleEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngleEvaluator")
            .field("modulus", &self.modulus)
            .field("line_offset", &self.line_offset)
            .field("lattice_tol", &self.lattice_tol)
            .field("nodes", &self.table.weights.len())
            .finish()
    }
}

impl AngleEvaluator {
    pub fn new(modulus: ModulusParameters) -> Self {
        let omega = modulus.omega;
        let w_big = modulus.w_big();
        let v0 = 0.5 * PI * omega.min(1.0);
        let step = 2.0 * PI * v0 / TRAPEZOID_EXPONENT;
        // After reduction Re x lies within half a step of W/2, so the integrand
        // decays at least like e^{−(W − s)|u|} along the line.
        let s = omega.recip().min(1.0);
        let margin = 0.5 * (w_big - s);
        let half = TAIL_EXPONENT / (2.0 * margin);
        let n = (half / step).ceil() as i64;
        let t0 = Complex64::new(-(n as f64) * step, -v0);
        let weights = (0..=2 * n)
            .map(|k| {
                let t = t0 + k as f64 * step;
                step * (w_big * t).exp() / (t * t.sinh() * (t / omega).sinh())
            })
            .collect();
        AngleEvaluator {
            modulus,
            line_offset: v0,
            lattice_tol: LATTICE_TOL,
            kappa: I * (PI / 4.0 + PI / 12.0 * (omega + omega.recip())),
            table: Arc::new(Table { t0, step, weights }),
        }
    }

    pub fn from_omega(omega: f64) -> Result<Self> {
        Ok(Self::new(ModulusParameters::new(omega)?))
    }

    pub fn modulus(&self) -> &ModulusParameters {
        &self.modulus
    }

    pub fn omega(&self) -> f64 {
        self.modulus.omega
    }

    pub fn w_big(&self) -> f64 {
        self.modulus.w_big()
    }

    /// The strip 0 < Re x < W where the integral representation holds directly.
    pub fn strip(&self) -> (f64, f64) {
        (0.0, self.w_big())
    }

    pub fn line_offset(&self) -> f64 {
        self.line_offset
    }

    pub fn with_lattice_tol(mut self, tol: f64) -> Self {
        self.lattice_tol = tol;
        self
    }

    pub fn lattice_tol(&self) -> f64 {
        self.lattice_tol
    }

    /// Locates x relative to the zero lattice (m, n ≤ 0) and the pole lattice (m, n ≥ 1).
    pub fn classify(&self, x: Complex64, tol: f64) -> LatticeClass {
        let omega = self.modulus.omega;
        if x.im.abs() > tol {
            return LatticeClass::Regular;
        }
        if x.re <= tol {
            let n_min = ((x.re - 1.0) * omega).floor() as i64 - 1;
            for n in (n_min..=0).rev() {
                let m = (x.re - n as f64 / omega).round() as i64;
                if m > 0 {
                    continue;
                }
                let p = self.modulus.lattice(m, n);
                if (x - p.value).norm() <= tol {
                    return LatticeClass::Zero(p);
                }
            }
        }
        if x.re >= self.w_big() - tol {
            let n_max = ((x.re - 1.0) * omega).ceil() as i64 + 1;
            for n in 1..=n_max {
                let m = (x.re - n as f64 / omega).round() as i64;
                if m < 1 {
                    continue;
                }
                let p = self.modulus.lattice(m, n);
                if (x - p.value).norm() <= tol {
                    return LatticeClass::Pole(p);
                }
            }
        }
        LatticeClass::Regular
    }

    /// log⟨x⟩. Zeros give a real part of −∞; poles are an error.
    pub fn log_angle(&self, x: Complex64) -> Result<Complex64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {x}")));
        }
        match self.classify(x, self.lattice_tol) {
            LatticeClass::Zero(_) => return Ok(Complex64::new(f64::NEG_INFINITY, 0.0)),
            LatticeClass::Pole(p) => return Err(Error::Pole { point: x, m: p.m, n: p.n }),
            LatticeClass::Regular => {}
        }
        let omega = self.modulus.omega;
        let centre = 0.5 * self.w_big();
        // Step by 1 (factor 1 − e^{2πiωy}) when ω ≤ 1, else by 1/ω (factor 1 − e^{2πiy}).
        let (step, freq) = if omega <= 1.0 { (1.0, omega) } else { (omega.recip(), 1.0) };
        let k = ((x.re - centre) / step).round() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut y = x;
        if k > 0 {
            for _ in 0..k {
                y -= step;
                acc -= log_one_minus_exp(2.0 * PI * I * freq * y);
            }
        } else {
            for _ in 0..(-k) {
                acc += log_one_minus_exp(2.0 * PI * I * freq * y);
                y += step;
            }
        }
        let core = if y.im >= 0.0 {
            self.log_angle_strip(y)
        } else {
            log_sigma(&self.modulus, y) - self.log_angle_strip(self.w_big() - y)
        };
        Ok(acc + core)
    }

    /// ⟨x⟩.
    pub fn angle(&self, x: Complex64) -> Result<Complex64> {
        Ok(self.log_angle(x)?.exp())
    }

    /// ⟨x⟩ for real x.
    pub fn angle_re(&self, x: f64) -> Result<Complex64> {
        self.angle(Complex64::new(x, 0.0))
    }

    /// Integral representation for x near W/2 with Im x ≥ 0.
    fn log_angle_strip(&self, x: Complex64) -> Complex64 {
        let tab = &*self.table;
        let ratio = (-2.0 * x * tab.step).exp();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut e = Complex64::new(0.0, 0.0);
        for (k, w) in tab.weights.iter().enumerate() {
            if k % REANCHOR == 0 {
                e = (-2.0 * x * (tab.t0 + k as f64 * tab.step)).exp();
            } else {
                e *= ratio;
            }
            sum += w * e;
        }
        self.kappa - 0.25 * sum
    }

    /// ⟨1⟩ = i/√ω.
    pub fn angle_one(&self) -> Complex64 {
        I / self.modulus.omega.sqrt()
    }
}

/// σ(x) = exp(πi((1+ω)x − ωx²)).
pub fn sigma(modulus: &ModulusParameters, x: Complex64) -> Complex64 {
    log_sigma(modulus, x).exp()
}

pub fn log_sigma(modulus: &ModulusParameters, x: Complex64) -> Complex64 {
    let w = modulus.omega;
    PI * I * ((1.0 + w) * x - w * x * x)
}

/// Residue of 1/⟨w⟩ at the zero w = −m − n/ω, m, n ≥ 0.
///
/// Equals 1/(2π√ω) divided by ∏_{j=1}^{m}(1 − q^{−j}) ∏_{k=1}^{n}(1 − Q^{−k}).
pub fn residue_inverse_angle(modulus: &ModulusParameters, m: i64, n: i64) -> Result<Complex64> {
    if m < 0 || n < 0 {
        return Err(Error::Domain(format!("residue index must be non-negative, got ({m}, {n})")));
    }
    let omega = modulus.omega;
    let mut denom = Complex64::new(2.0 * PI * omega.sqrt(), 0.0);
    for j in 1..=m {
        let f = Complex64::new(1.0, 0.0) - modulus.q_pow(Complex64::new(-(j as f64), 0.0));
        denom *= f;
        if f.norm() < 1e-12 {
            return Err(Error::HigherOrderPole(format!("q^{j} = 1 makes the zero at ({m}, {n}) multiple")));
        }
    }
    for k in 1..=n {
        let f = Complex64::new(1.0, 0.0) - modulus.big_q_pow(Complex64::new(-(k as f64), 0.0));
        denom *= f;
        if f.norm() < 1e-12 {
            return Err(Error::HigherOrderPole(format!("Q^{k} = 1 makes the zero at ({m}, {n}) multiple")));
        }
    }
    Ok(denom.inv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ev(omega: f64) -> AngleEvaluator {
        AngleEvaluator::from_omega(omega).unwrap()
    }

    #[test]
    fn normalization_at_one() {
        for omega in [FRAC_1_SQRT_2, SQRT_2, SQRT_2 / 16.0, 3.3, 0.05] {
            let a = ev(omega);
            let v = a.angle_re(1.0).unwrap();
            let want = c(0.0, 1.0 / omega.sqrt());
            assert!((v - want).norm() < 1e-12 * want.norm(), "omega={omega}: {v} vs {want}");
            let v = a.angle_re(1.0 / omega).unwrap();
            let want = c(0.0, omega.sqrt());
            assert!((v - want).norm() < 1e-12 * want.norm(), "omega={omega}: {v} vs {want}");
        }
    }

    #[test]
    fn zeros_and_poles() {
        let a = ev(FRAC_1_SQRT_2);
        assert_eq!(a.angle_re(0.0).unwrap(), c(0.0, 0.0));
        assert_eq!(a.angle(c(-1.0 - SQRT_2, 0.0)).unwrap(), c(0.0, 0.0));
        let w = a.w_big();
        assert!(matches!(a.angle_re(w), Err(Error::Pole { m: 1, n: 1, .. })));
        assert!(matches!(a.angle_re(2.0 + 2.0 * SQRT_2), Err(Error::Pole { m: 2, n: 2, .. })));
        assert!(a.angle(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn slope_at_zero() {
        let a = ev(FRAC_1_SQRT_2);
        let eps = 1e-8;
        let v = a.angle_re(eps).unwrap();
        let want = 2.0 * PI * a.omega() * a.angle_one().norm() * eps;
        assert!((v.norm() - want).abs() < 1e-6 * want);
    }

    #[test]
    fn residue_values() {
        let m = ModulusParameters::new(FRAC_1_SQRT_2).unwrap();
        let r00 = residue_inverse_angle(&m, 0, 0).unwrap();
        assert!((r00 - c(1.0 / (2.0 * PI * m.omega.sqrt()), 0.0)).norm() < 1e-15);
        let r10 = residue_inverse_angle(&m, 1, 0).unwrap();
        let want = r00 / (c(1.0, 0.0) - m.q.inv());
        assert!((r10 - want).norm() < 1e-14);
        // Compare against a numerical derivative of ⟨w⟩ at the zero.
        let a = AngleEvaluator::new(m);
        for (mm, nn) in [(1i64, 0i64), (0, 1), (2, 1)] {
            let w0 = -(mm as f64) - nn as f64 / m.omega;
            let h = 1e-6;
            let d = (a.angle_re(w0 + h).unwrap() - a.angle_re(w0 - h).unwrap()) / (2.0 * h);
            let r = residue_inverse_angle(&m, mm, nn).unwrap();
            assert!((r * d - 1.0).norm() < 1e-7, "({mm},{nn})");
        }
        assert!(residue_inverse_angle(&m, -1, 0).is_err());
        let half = ModulusParameters::new(0.5).unwrap();
        assert!(matches!(residue_inverse_angle(&half, 2, 0), Err(Error::HigherOrderPole(_))));
    }

    #[test]
    fn classify_points() {
        let a = ev(FRAC_1_SQRT_2);
        assert!(matches!(a.classify(c(-2.0, 0.0), 1e-9), LatticeClass::Zero(p) if p.m == -2 && p.n == 0));
        assert!(matches!(a.classify(c(-SQRT_2, 0.0), 1e-9), LatticeClass::Zero(p) if p.m == 0 && p.n == -1));
        assert_eq!(a.classify(c(-0.5, 0.0), 1e-9), LatticeClass::Regular);
        assert_eq!(a.classify(c(-2.0, 1e-3), 1e-9), LatticeClass::Regular);
        assert!(matches!(a.classify(c(1.0 + 2.0 * SQRT_2, 0.0), 1e-9), LatticeClass::Pole(p) if p.m == 1 && p.n == 2));
    }
}
