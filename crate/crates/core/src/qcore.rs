//! Modulus, the two tori, lattices and q-Pochhammer symbols.
//!
//! For ω > 0 the bases are q = e^{2πiω} and Q = e^{2πi/ω}, both on the unit
//! circle. Points z of the complex plane map to t = e^{2πiωz} and T = e^{2πiz}.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Denominator bound and distance used for the near-rational warning.
const RATIONAL_DENOM_MAX: i64 = 50;
const RATIONAL_DIST: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusParameters {
    pub omega: f64,
    pub q: Complex64,
    pub big_q: Complex64,
    /// Set to `(p, s)` when |ω − p/s| < 1e-6 for some s ≤ 50.
    pub near_rational: Option<(i64, i64)>,
}

impl ModulusParameters {
    pub fn new(omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::Domain(format!("omega must be a positive real, got {omega}")));
        }
        let near_rational = (1..=RATIONAL_DENOM_MAX).find_map(|s| {
            let p = (omega * s as f64).round() as i64;
            ((omega - p as f64 / s as f64).abs() < RATIONAL_DIST).then_some((p, s))
        });
        Ok(ModulusParameters {
            omega,
            q: expi(2.0 * PI * omega),
            big_q: expi(2.0 * PI / omega),
            near_rational,
        })
    }

    /// W = 1 + 1/ω, the reflection point of the double sine angle.
    pub fn w_big(&self) -> f64 {
        1.0 + 1.0 / self.omega
    }

    /// t = e^{2πiωz}.
    pub fn torus_q(&self, z: Complex64) -> Complex64 {
        (2.0 * PI * self.omega * I * z).exp()
    }

    /// T = e^{2πiz}.
    pub fn torus_big_q(&self, z: Complex64) -> Complex64 {
        (2.0 * PI * I * z).exp()
    }

    /// q^a = e^{2πiωa} for complex a.
    pub fn q_pow(&self, a: Complex64) -> Complex64 {
        self.torus_q(a)
    }

    /// Q^a = e^{2πia/ω} for complex a.
    pub fn big_q_pow(&self, a: Complex64) -> Complex64 {
        (2.0 * PI * I * a / self.omega).exp()
    }

    /// The point m + n/ω.
    pub fn lattice(&self, m: i64, n: i64) -> LatticePoint {
        LatticePoint { m, n, value: m as f64 + n as f64 / self.omega }
    }
}

pub(crate) fn expi(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// A point m + n/ω of the lattice Z + Z/ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticePoint {
    pub m: i64,
    pub n: i64,
    pub value: f64,
}

/// (x; b)_n in the standard convention.
///
/// n ≥ 0 gives ∏_{j<n}(1 − x b^j); n < 0 gives ∏_{j=1}^{|n|}(1 − x b^{−j})^{−1}.
pub fn poch(x: Complex64, b: Complex64, n: i64) -> Result<Complex64> {
    if !x.is_finite() || !b.is_finite() {
        return Err(Error::Domain("non-finite Pochhammer argument".into()));
    }
    if n >= 0 {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut xb = x;
        for _ in 0..n {
            acc *= Complex64::new(1.0, 0.0) - xb;
            xb *= b;
        }
        return Ok(acc);
    }
    let binv = b.inv();
    let mut acc = Complex64::new(1.0, 0.0);
    let mut xb = x * binv;
    for j in 1..=(-n) {
        let f = Complex64::new(1.0, 0.0) - xb;
        if f.norm() == 0.0 {
            return Err(Error::PochhammerPole { j });
        }
        acc /= f;
        xb *= binv;
    }
    Ok(acc)
}

/// Extreme real parts of lattice families anchored at the given points.
///
/// A left family `a + Z≤0 + Z≤0/ω` extends to −∞ and reaches at most Re a; a
/// right family `a + Z≥0 + Z≥0/ω` starts at Re a. Returns
/// `(max over left anchors, min over right anchors)`; empty lists give −∞/+∞.
pub fn lattice_extrema(left_anchors: &[Complex64], right_anchors: &[Complex64]) -> (f64, f64) {
    let left = left_anchors.iter().map(|a| a.re).fold(f64::NEG_INFINITY, f64::max);
    let right = right_anchors.iter().map(|a| a.re).fold(f64::INFINITY, f64::min);
    (left, right)
}

/// log(1 − e^{u}) on a branch that stays accurate when u is near 0 and when Re u is large.
pub(crate) fn log_one_minus_exp(u: Complex64) -> Complex64 {
    if u.re > 30.0 {
        // 1 − e^u = −e^u (1 − e^{−u})
        return u + Complex64::new(0.0, PI) + (-(-u).exp()).ln_1p_c();
    }
    (-expm1(u)).ln()
}

/// e^u − 1 without cancellation for small |u|.
pub(crate) fn expm1(u: Complex64) -> Complex64 {
    if u.norm() < 1e-3 {
        // Taylor series; |u| < 1e-3 makes six terms exact to double precision.
        let mut term = u;
        let mut sum = u;
        for k in 2..8 {
            term *= u / k as f64;
            sum += term;
        }
        return sum;
    }
    u.exp() - 1.0
}

trait Ln1p {
    fn ln_1p_c(self) -> Complex64;
}

impl Ln1p for Complex64 {
    fn ln_1p_c(self) -> Complex64 {
        if self.norm() < 1e-4 {
            self - self * self / 2.0 + self * self * self / 3.0
        } else {
            (Complex64::new(1.0, 0.0) + self).ln()
        }
    }
}

/// Parses "re,im" or a plain real number.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let bad = || Error::Domain(format!("cannot parse complex number from {s:?}"));
    match s.split_once(',') {
        Some((re, im)) => {
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            Ok(Complex64::new(re, im))
        }
        None => Ok(Complex64::new(s.parse().map_err(|_| bad())?, 0.0)),
    }
}

/// Formats as "re,im" with round-trip precision.
pub fn format_complex(z: Complex64) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn modulus_roots_of_unity() {
        let m = ModulusParameters::new(0.5).unwrap();
        assert!((m.q - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((m.big_q - c(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(m.near_rational, Some((1, 2)));
        let m = ModulusParameters::new(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert_eq!(m.near_rational, None);
    }

    #[test]
    fn modulus_rejects_nonpositive() {
        assert!(ModulusParameters::new(0.0).is_err());
        assert!(ModulusParameters::new(-1.0).is_err());
        assert!(ModulusParameters::new(f64::NAN).is_err());
    }

    #[test]
    fn poch_small_cases() {
        let x = c(0.3, 0.2);
        let b = c(0.5, 0.0);
        let p3 = poch(x, b, 3).unwrap();
        let direct = (c(1.0, 0.0) - x) * (c(1.0, 0.0) - x * b) * (c(1.0, 0.0) - x * b * b);
        assert!((p3 - direct).norm() < 1e-15);
        assert_eq!(poch(x, b, 0).unwrap(), c(1.0, 0.0));
        let pm1 = poch(x, b, -1).unwrap();
        assert!((pm1 - (c(1.0, 0.0) - x / b).inv()).norm() < 1e-14);
        assert_eq!(poch(c(0.5, 0.0), c(0.5, 0.0), -1), Err(Error::PochhammerPole { j: 1 }));
    }

    #[test]
    fn poch_split_identity() {
        let x = c(0.3, -0.7);
        let b = expi(1.1);
        for m in -3i64..4 {
            for n in -3i64..4 {
                let lhs = poch(x, b, m + n).unwrap();
                let rhs = poch(x, b, m).unwrap() * poch(x * b.powi(m as i32), b, n).unwrap();
                assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn extrema() {
        let (l, r) = lattice_extrema(&[c(-0.4, 1.0), c(-1.2, 0.0)], &[c(0.0, 0.0), c(1.1, 2.0)]);
        assert_eq!((l, r), (-0.4, 0.0));
    }

    #[test]
    fn log_one_minus_exp_branches() {
        for u in [c(1e-9, 2e-9), c(0.3, 1.0), c(40.0, 0.5), c(-50.0, 3.0)] {
            let v = log_one_minus_exp(u).exp();
            let direct = if u.norm() < 1e-6 { -(u + u * u / 2.0) } else { c(1.0, 0.0) - u.exp() };
            assert!((v - direct).norm() <= 1e-13 * direct.norm(), "{u}");
        }
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_complex("0.4").unwrap(), c(0.4, 0.0));
        assert_eq!(parse_complex(" 1.5, -2 ").unwrap(), c(1.5, -2.0));
        assert!(parse_complex("x").is_err());
        let z = c(0.1, -3.0);
        assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }
}
