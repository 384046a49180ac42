//! Integration along vertical lines z = ρ + iy.
//!
//! Each half-line (y > 0 and y < 0) is covered by Gauss–Kronrod (7/15) panels
//! marching outward from y = 0. The march stops once a geometric fit through
//! the last two panels puts the remaining tail below the tolerance. The panels
//! are then refined by bisection until the Kronrod error estimates fit the
//! budget. All sums run in a fixed order, so the result does not depend on how
//! many threads evaluate the panels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::I;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Upward,
    Downward,
}

/// Where and how to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    /// Real part of the line.
    pub rho: f64,
    /// Largest |y| the march may reach.
    pub y_max: f64,
    /// Requested accuracy relative to ∫|f||dz|.
    pub tol: f64,
    /// Cap on the number of panels after refinement.
    pub max_panels: usize,
    pub orientation: Orientation,
}

impl ContourSpec {
    pub fn new(rho: f64, tol: f64) -> Self {
        ContourSpec { rho, y_max: 1.0e4, tol, max_panels: 40_000, orientation: Orientation::Upward }
    }

    pub fn reversed(mut self) -> Self {
        self.orientation = match self.orientation {
            Orientation::Upward => Orientation::Downward,
            Orientation::Downward => Orientation::Upward,
        };
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    /// Sum of the panel error estimates.
    pub abs_error: f64,
    /// Estimated size of the integral beyond the truncation heights.
    pub truncation: f64,
    /// ∫|f||dz| over the covered range.
    pub scale: f64,
    pub panels: usize,
    pub evaluations: usize,
    /// Truncation heights reached below and above the real axis.
    pub y_lower: f64,
    pub y_upper: f64,
    pub converged: bool,
}

impl QuadratureResult {
    /// Total error bound: quadrature estimate plus truncation.
    pub fn error_bound(&self) -> f64 {
        self.abs_error + self.truncation
    }
}

/// Aggregate statistics over several integrals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct QuadSummary {
    pub integrals: usize,
    pub panels: usize,
    pub evaluations: usize,
    /// Largest truncation estimate among the integrals.
    pub max_truncation: f64,
    /// Largest total error bound among the integrals.
    pub max_error: f64,
    /// Largest |y| reached.
    pub max_height: f64,
}

impl QuadSummary {
    pub fn of(q: &QuadratureResult) -> Self {
        QuadSummary {
            integrals: 1,
            panels: q.panels,
            evaluations: q.evaluations,
            max_truncation: q.truncation,
            max_error: q.error_bound(),
            max_height: q.y_lower.abs().max(q.y_upper.abs()),
        }
    }

    pub fn merge(self, o: QuadSummary) -> Self {
        QuadSummary {
            integrals: self.integrals + o.integrals,
            panels: self.panels + o.panels,
            evaluations: self.evaluations + o.evaluations,
            max_truncation: self.max_truncation.max(o.max_truncation),
            max_error: self.max_error.max(o.max_error),
            max_height: self.max_height.max(o.max_height),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    l1: f64,
    err: f64,
}

fn kronrod<G>(g: &G, a: f64, b: f64) -> Result<Panel>
where
    G: Fn(f64) -> Result<Complex64> + ?Sized,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut absk = fc.norm() * WGK[7];
    let mut vals = [(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); 7];
    for (j, v) in vals.iter_mut().enumerate() {
        let dx = h * XGK[j];
        let f1 = g(c - dx)?;
        let f2 = g(c + dx)?;
        resk += (f1 + f2) * WGK[j];
        absk += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            resg += (f1 + f2) * WG[j / 2];
        }
        *v = (f1, f2);
    }
    let mean = resk * 0.5;
    let mut asc = (fc - mean).norm() * WGK[7];
    for (j, (f1, f2)) in vals.iter().enumerate() {
        asc += ((f1 - mean).norm() + (f2 - mean).norm()) * WGK[j];
    }
    let asc = asc * h;
    let raw = ((resk - resg) * h).norm();
    let err = if asc > 0.0 && raw > 0.0 { asc * (200.0 * raw / asc).powf(1.5).min(1.0) } else { raw };
    let value = resk * h;
    let l1 = absk * h;
    if !value.is_finite() || !l1.is_finite() {
        return Err(Error::Divergent(format!("integrand overflows on [{a}, {b}]")));
    }
    Ok(Panel { a, b, value, l1, err: err.max(50.0 * f64::EPSILON * l1) })
}

struct Side {
    panels: Vec<Panel>,
    tail: f64,
    extent: f64,
    reached_cap: bool,
}

/// Marches outward along v ≥ 0 for g(v), stopping when the tail is negligible.
fn march<G>(g: &G, tol: f64, y_max: f64) -> Result<Side>
where
    G: Fn(f64) -> Result<Complex64>,
{
    let mut panels: Vec<Panel> = Vec::new();
    let mut a = 0.0f64;
    let mut width = 0.5;
    let mut l1_total = 0.0;
    let mut rising = 0usize;
    loop {
        let b = (a + width).min(y_max);
        let p = kronrod(g, a, b)?;
        l1_total += p.l1;
        panels.push(p);
        a = b;
        let n = panels.len();
        if n >= 3 {
            let (p0, p1) = (&panels[n - 2], &panels[n - 1]);
            let d0 = p0.l1 / (p0.b - p0.a);
            let d1 = p1.l1 / (p1.b - p1.a);
            let gap = 0.5 * (p1.a + p1.b) - 0.5 * (p0.a + p0.b);
            let lambda = if d1 > 0.0 && d0 > 0.0 { (d0 / d1).ln() / gap } else { f64::INFINITY };
            if d1 == 0.0 || (lambda > 0.0 && lambda.is_finite()) {
                let tail = if d1 == 0.0 { 0.0 } else { 2.0 * d1 * (-lambda * (b - 0.5 * (p1.a + p1.b))).exp() / lambda };
                if tail <= 1e-3 * tol * l1_total {
                    return Ok(Side { panels, tail, extent: b, reached_cap: false });
                }
                if lambda * width < 0.7 && width < 32.0 {
                    width *= 2.0;
                }
            }
            if d1 > d0 && b > 4.0 {
                rising += 1;
                if rising >= 6 {
                    return Err(Error::Divergent(format!(
                        "integrand grows along the line (|f| density {d1:.3e} at |y| = {b:.1})"
                    )));
                }
            } else {
                rising = 0;
            }
            if b >= y_max {
                let tail = if lambda > 0.0 && lambda.is_finite() { 2.0 * d1 / lambda } else { f64::INFINITY };
                return Ok(Side { panels, tail, extent: b, reached_cap: true });
            }
        }
    }
}

/// ∫ f(z) dz along z = ρ + iy, y from −∞ to ∞ (or the reverse).
pub fn integrate_vertical<F>(f: F, spec: &ContourSpec) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if !spec.rho.is_finite() || spec.tol.is_nan() || spec.tol <= 0.0 {
        return Err(Error::Domain("contour needs a finite offset and positive tolerance".into()));
    }
    let rho = spec.rho;
    let up = |v: f64| f(Complex64::new(rho, v));
    let down = |v: f64| f(Complex64::new(rho, -v));
    let (upper, lower) = rayon::join(|| march(&up, spec.tol, spec.y_max), || march(&down, spec.tol, spec.y_max));
    let (upper, lower) = (upper?, lower?);

    // Refine both sides together against one global budget.
    let mut sides = [upper.panels, lower.panels];
    let scale: f64 = sides.iter().flatten().map(|p| p.l1).sum();
    let truncation = upper.tail + lower.tail;
    let mut evaluations = 15 * (sides[0].len() + sides[1].len());
    let mut converged = !(upper.reached_cap || lower.reached_cap);
    loop {
        let value: Complex64 = sides.iter().flatten().map(|p| p.value).sum();
        let err: f64 = sides.iter().flatten().map(|p| p.err).sum();
        let target = 0.5 * spec.tol * scale.max(value.norm());
        let count = sides[0].len() + sides[1].len();
        if err <= target || scale == 0.0 {
            break;
        }
        if count >= spec.max_panels {
            converged = false;
            break;
        }
        let threshold = target / count as f64;
        let worst = sides.iter().flatten().map(|p| p.err).fold(0.0, f64::max);
        for (k, side) in sides.iter_mut().enumerate() {
            let g: &(dyn Fn(f64) -> Result<Complex64> + Sync) = if k == 0 { &up } else { &down };
            let refined: Vec<Result<Vec<Panel>>> = side
                .par_iter()
                .map(|p| {
                    if p.err > threshold || p.err == worst {
                        let m = 0.5 * (p.a + p.b);
                        Ok(vec![kronrod(g, p.a, m)?, kronrod(g, m, p.b)?])
                    } else {
                        Ok(vec![*p])
                    }
                })
                .collect();
            let mut next = Vec::with_capacity(side.len() * 2);
            for r in refined {
                let r = r?;
                if r.len() == 2 {
                    evaluations += 30;
                }
                next.extend(r);
            }
            *side = next;
        }
    }

    let sum_side = |s: &[Panel]| s.iter().fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value);
    let total = sum_side(&sides[0]) + sum_side(&sides[1]);
    let factor = match spec.orientation {
        Orientation::Upward => I,
        Orientation::Downward => -I,
    };
    let value = total * factor;
    let abs_error: f64 = sides.iter().flatten().map(|p| p.err).sum();
    let converged = converged && abs_error + truncation <= spec.tol * scale.max(value.norm());
    Ok(QuadratureResult {
        value,
        abs_error,
        truncation,
        scale,
        panels: sides[0].len() + sides[1].len(),
        evaluations,
        y_lower: -lower.extent,
        y_upper: upper.extent,
        converged,
    })
}

/// A line strictly between the left lattice (reaching `left_max`) and the right lattice (starting at `right_min`).
pub fn find_separating_offset(left_max: f64, right_min: f64) -> Result<f64> {
    if left_max.is_nan() || right_min.is_nan() {
        return Err(Error::Domain("NaN lattice bound".into()));
    }
    if left_max >= right_min {
        return Err(Error::NoSeparatingLine { left_max, right_min });
    }
    Ok(match (left_max.is_finite(), right_min.is_finite()) {
        (true, true) => 0.5 * (left_max + right_min),
        (true, false) => left_max + 1.0,
        (false, true) => right_min - 1.0,
        (false, false) => 0.0,
    })
}

/// Residue of f at a simple pole z0, from the trapezoid rule on a circle of the given radius.
///
/// Fails with `HigherOrderPole` when the (z − z0)^{−2} coefficient is not negligible.
pub fn residue_simple<F>(f: F, z0: Complex64, radius: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let moments = |n: usize| -> Result<(Complex64, Complex64, f64)> {
        let mut c1 = Complex64::new(0.0, 0.0);
        let mut c2 = Complex64::new(0.0, 0.0);
        let mut mag = 0.0f64;
        for k in 0..n {
            let e = Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64);
            let v = f(z0 + e)?;
            c1 += v * e;
            c2 += v * e * e;
            mag = mag.max((v * e).norm());
        }
        Ok((c1 / n as f64, c2 / n as f64, mag))
    };
    let (r1, s1, mag) = moments(64)?;
    let (r2, s2, _) = moments(128)?;
    if (r1 - r2).norm() > 1e-8 * mag.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain("residue circle did not converge; shrink the radius".into()));
    }
    let second = 0.5 * (s1 + s2).norm() / radius;
    if second > 1e-6 * r2.norm().max(mag) {
        return Err(Error::HigherOrderPole(format!("(z − z0)^(−2) coefficient {second:.3e} at {z0}")));
    }
    Ok(r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gaussian_line() {
        // ∫ e^{z²} dz along Re z = 0.3 equals i√π.
        let spec = ContourSpec::new(0.3, 1e-12);
        let r = integrate_vertical(|z: Complex64| Ok((z * z).exp()), &spec).unwrap();
        assert!((r.value - c(0.0, PI.sqrt())).norm() < 1e-11, "{:?}", r);
        assert!(r.converged);
        let rev = integrate_vertical(|z: Complex64| Ok((z * z).exp()), &spec.reversed()).unwrap();
        assert_eq!(rev.value, -r.value);
    }

    #[test]
    fn slow_exponential_tail() {
        // ∫ 1/cosh(0.2 y) dy = π/0.2 on the imaginary axis.
        let spec = ContourSpec::new(0.0, 1e-11);
        let f = |z: Complex64| Ok((-I * z * 0.2).cosh().inv());
        let r = integrate_vertical(f, &spec).unwrap();
        assert!((r.value - I * (PI / 0.2)).norm() < 1e-9 * PI / 0.2, "{:?}", r);
        assert!(r.y_upper > 100.0);
    }

    #[test]
    fn divergence_is_reported() {
        let spec = ContourSpec::new(0.0, 1e-10);
        let r = integrate_vertical(|z: Complex64| Ok((-I * z * 0.3).exp()), &spec);
        assert!(matches!(r, Err(Error::Divergent(_))), "{r:?}");
    }

    #[test]
    fn separating_offset() {
        assert_eq!(find_separating_offset(-0.4, 0.0).unwrap(), -0.2);
        assert!(matches!(find_separating_offset(0.1, 0.0), Err(Error::NoSeparatingLine { .. })));
        assert_eq!(find_separating_offset(f64::NEG_INFINITY, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn residues() {
        let f = |z: Complex64| Ok(z.exp() / (z - 0.5));
        let r = residue_simple(f, c(0.5, 0.0), 0.1).unwrap();
        assert!((r - c(0.5f64.exp(), 0.0)).norm() < 1e-13);
        let g = |z: Complex64| Ok(Complex64::new(1.0, 0.0) / ((z - 0.5) * (z - 0.5)));
        assert!(matches!(residue_simple(g, c(0.5, 0.0), 0.1), Err(Error::HigherOrderPole(_))));
    }
}
