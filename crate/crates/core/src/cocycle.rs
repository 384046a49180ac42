//! Jordan–Pochhammer weights and the rational functions paired against them.
//!
//! The weight is Φ(z) = e^{2πiωαz} ∏⟨z+γ′_j⟩/⟨z+γ_j⟩. Its q-shift ratio
//! b_χ(t) = Φ(z+χ)/Φ(z) and Q-shift ratio b̃_χ(T) = Φ(z+χ/ω)/Φ(z) are
//! rational in t = e^{2πiωz} and T = e^{2πiz}. Cocycle elements are Laurent
//! polynomials over products of Pochhammer factors
//!
//! ```text
//! left family   (c q^{−ℓ} t; q)_ℓ,  c  = e^{2πiωγ_j}
//! right family  (c′ t; q)_ℓ′,       c′ = e^{2πiωγ′_j}
//! ```
//!
//! (and the same with Q, T, C = e^{2πiγ} on the dual side). Each such factor
//! can be absorbed into Φ by shifting the matching offset, which is how the
//! pairing integrals are evaluated.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::doublesine::AngleEvaluator;
use crate::error::{Error, Result};
use crate::qcore::{ModulusParameters, I};

/// Relative distance under which two anchors count as the same torus point.
const ANCHOR_TOL: f64 = 1e-10;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Which torus a rational function lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Side {
    /// Variable t = e^{2πiωz}, base q, unit shift z → z + 1.
    Q,
    /// Variable T = e^{2πiz}, base Q, unit shift z → z + 1/ω.
    Dual,
}

impl Side {
    /// Frequency f with variable e^{2πi f z}.
    pub fn frequency(self, m: &ModulusParameters) -> f64 {
        match self {
            Side::Q => m.omega,
            Side::Dual => 1.0,
        }
    }

    /// Shift in z corresponding to multiplying the variable by the base.
    pub fn step(self, m: &ModulusParameters) -> f64 {
        match self {
            Side::Q => 1.0,
            Side::Dual => 1.0 / m.omega,
        }
    }

    pub fn variable(self, m: &ModulusParameters, z: Complex64) -> Complex64 {
        (2.0 * PI * I * self.frequency(m) * z).exp()
    }

    pub fn base(self, m: &ModulusParameters) -> Complex64 {
        match self {
            Side::Q => m.q,
            Side::Dual => m.big_q,
        }
    }

    /// Anchor constant e^{2πi f γ} for an offset γ.
    pub fn anchor(self, m: &ModulusParameters, gamma: Complex64) -> Complex64 {
        self.variable(m, gamma)
    }
}

/// Finite Laurent polynomial Σ a_k x^k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Laurent {
    coeffs: BTreeMap<i32, Complex64>,
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent { coeffs: BTreeMap::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Laurent::monomial(0, c)
    }

    pub fn one() -> Self {
        Laurent::constant(one())
    }

    pub fn monomial(k: i32, c: Complex64) -> Self {
        let mut coeffs = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            coeffs.insert(k, c);
        }
        Laurent { coeffs }
    }

    /// Builds Σ coeffs[j] x^{low+j}.
    pub fn from_coeffs(low: i32, coeffs: &[Complex64]) -> Self {
        let mut out = Laurent::zero();
        for (j, c) in coeffs.iter().enumerate() {
            out = out.add(&Laurent::monomial(low + j as i32, *c));
        }
        out
    }

    /// 1 − a x.
    pub fn linear(a: Complex64) -> Self {
        Laurent::one().add(&Laurent::monomial(1, -a))
    }

    /// (a x; b)_ℓ expanded.
    pub fn pochhammer(a: Complex64, b: Complex64, len: u32) -> Self {
        let mut out = Laurent::one();
        let mut ab = a;
        for _ in 0..len {
            out = out.mul(&Laurent::linear(ab));
            ab *= b;
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, *c))
    }

    pub fn coeff(&self, k: i32) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// (lowest, highest) exponent, or None for the zero polynomial.
    pub fn degree_range(&self) -> Option<(i32, i32)> {
        Some((*self.coeffs.keys().next()?, *self.coeffs.keys().next_back()?))
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            let e = coeffs.entry(*k).or_default();
            *e += c;
            if *e == Complex64::new(0.0, 0.0) {
                coeffs.remove(k);
            }
        }
        Laurent { coeffs }
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        self.add(&other.scale(-one()))
    }

    pub fn scale(&self, s: Complex64) -> Laurent {
        let mut out = Laurent::zero();
        for (k, c) in &self.coeffs {
            out = out.add(&Laurent::monomial(*k, c * s));
        }
        out
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::zero();
        for (k1, c1) in &self.coeffs {
            for (k2, c2) in &other.coeffs {
                out = out.add(&Laurent::monomial(k1 + k2, c1 * c2));
            }
        }
        out
    }

    /// p(λ x).
    pub fn dilate(&self, lambda: Complex64) -> Laurent {
        let mut out = Laurent::zero();
        for (k, c) in &self.coeffs {
            out = out.add(&Laurent::monomial(*k, c * lambda.powi(*k)));
        }
        out
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().map(|(k, c)| c * x.powi(*k)).sum()
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients below `tol` times the largest one.
    pub fn prune(&self, tol: f64) -> Laurent {
        let cut = tol * self.max_abs();
        Laurent { coeffs: self.coeffs.iter().filter(|(_, c)| c.norm() > cut).map(|(k, c)| (*k, *c)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FactorKind {
    /// (c q^{−ℓ} t; q)_ℓ, anchored at a denominator offset γ_j.
    Left,
    /// (c′ t; q)_ℓ, anchored at a numerator offset γ′_j.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DenomFactor {
    pub gamma: Complex64,
    pub len: u32,
    pub kind: FactorKind,
}

impl DenomFactor {
    pub fn value(&self, side: Side, m: &ModulusParameters, var: Complex64) -> Complex64 {
        let c = side.anchor(m, self.gamma);
        let b = side.base(m);
        let mut acc = one();
        match self.kind {
            FactorKind::Right => {
                let mut cb = c;
                for _ in 0..self.len {
                    acc *= one() - cb * var;
                    cb *= b;
                }
            }
            FactorKind::Left => {
                let binv = b.inv();
                let mut cb = c * binv;
                for _ in 0..self.len {
                    acc *= one() - cb * var;
                    cb *= binv;
                }
            }
        }
        acc
    }
}

/// Numerator Laurent polynomial over a product of Pochhammer factors, on one side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocycleElement {
    pub side: Side,
    pub numerator: Laurent,
    pub factors: Vec<DenomFactor>,
}

impl CocycleElement {
    pub fn one(side: Side) -> Self {
        CocycleElement { side, numerator: Laurent::one(), factors: Vec::new() }
    }

    pub fn polynomial(side: Side, numerator: Laurent) -> Self {
        CocycleElement { side, numerator, factors: Vec::new() }
    }

    /// 1/(1 − c′ t) for the numerator offset γ′.
    pub fn basis(side: Side, gamma_prime: Complex64) -> Self {
        CocycleElement {
            side,
            numerator: Laurent::one(),
            factors: vec![DenomFactor { gamma: gamma_prime, len: 1, kind: FactorKind::Right }],
        }
    }

    pub fn with_factor(mut self, factor: DenomFactor) -> Self {
        self.factors.push(factor);
        self
    }

    pub fn scale(mut self, s: Complex64) -> Self {
        self.numerator = self.numerator.scale(s);
        self
    }

    /// Value at the point z of the plane.
    pub fn eval(&self, m: &ModulusParameters, z: Complex64) -> Complex64 {
        self.eval_var(m, self.side.variable(m, z))
    }

    /// Value at the torus variable t (or T).
    pub fn eval_var(&self, m: &ModulusParameters, var: Complex64) -> Complex64 {
        let den: Complex64 = self.factors.iter().map(|f| f.value(self.side, m, var)).product();
        self.numerator.eval(var) / den
    }

    /// Checks that every factor is anchored at an offset of the weight of the matching kind.
    pub fn check_against(&self, jp: &JordanPochhammerWeight) -> Result<()> {
        for f in &self.factors {
            jp.match_anchor(self.side, f.kind, f.gamma)?;
        }
        Ok(())
    }
}

/// Φ(z) = e^{2πiωαz} ∏⟨z+γ′_j⟩/⟨z+γ_j⟩.
#[derive(Debug, Clone)]
pub struct JordanPochhammerWeight {
    pub eval: AngleEvaluator,
    pub alpha: Complex64,
    pub gammas: Vec<Complex64>,
    pub gamma_primes: Vec<Complex64>,
}

impl JordanPochhammerWeight {
    pub fn new(eval: AngleEvaluator, alpha: Complex64, gammas: Vec<Complex64>, gamma_primes: Vec<Complex64>) -> Result<Self> {
        if gammas.len() != gamma_primes.len() {
            return Err(Error::Domain(format!(
                "need as many numerator as denominator offsets, got {} and {}",
                gamma_primes.len(),
                gammas.len()
            )));
        }
        let finite = alpha.is_finite() && gammas.iter().chain(&gamma_primes).all(|g| g.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite weight parameter".into()));
        }
        Ok(JordanPochhammerWeight { eval, alpha, gammas, gamma_primes })
    }

    pub fn n(&self) -> usize {
        self.gammas.len()
    }

    pub fn modulus(&self) -> &ModulusParameters {
        self.eval.modulus()
    }

    pub fn with_alpha(&self, alpha: Complex64) -> Self {
        JordanPochhammerWeight { alpha, ..self.clone() }
    }

    /// log Φ(z); a real part of −∞ marks a zero of Φ.
    pub fn log_phi(&self, z: Complex64) -> Result<Complex64> {
        let omega = self.modulus().omega;
        let mut s = 2.0 * PI * I * omega * self.alpha * z;
        for g in &self.gamma_primes {
            s += self.eval.log_angle(z + g)?;
        }
        for g in &self.gammas {
            let l = self.eval.log_angle(z + g)?;
            if l.re == f64::NEG_INFINITY {
                return Err(Error::Pole { point: z, m: 0, n: 0 });
            }
            s -= l;
        }
        Ok(s)
    }

    pub fn phi(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.log_phi(z)?.exp())
    }

    /// Index of the offset whose anchor on `side` equals that of `gamma`.
    pub fn match_anchor(&self, side: Side, kind: FactorKind, gamma: Complex64) -> Result<usize> {
        let m = self.modulus();
        let target = side.anchor(m, gamma);
        let list = match kind {
            FactorKind::Left => &self.gammas,
            FactorKind::Right => &self.gamma_primes,
        };
        list.iter()
            .position(|g| (side.anchor(m, *g) - target).norm() <= ANCHOR_TOL * target.norm().max(1.0))
            .ok_or_else(|| {
                Error::NotInSpace(format!("{kind:?} factor anchored at {gamma} matches no offset of the weight"))
            })
    }

    /// Whether no γ_j − γ′_k lies on the lattice Z + Z/ω (within tolerance).
    pub fn is_generic(&self, tol: f64) -> bool {
        let omega = self.modulus().omega;
        for g in &self.gammas {
            for gp in &self.gamma_primes {
                let d = g - gp;
                if d.im.abs() > tol {
                    continue;
                }
                let n_lim = (d.re.abs() * omega).ceil() as i64 + 2;
                for n in -n_lim..=n_lim {
                    let m = (d.re - n as f64 / omega).round();
                    if (d - (m + n as f64 / omega)).norm() <= tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Factorization b = prefactor · plus / minus of a shift ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocycleFactor {
    pub side: Side,
    pub chi: i32,
    pub prefactor: Complex64,
    pub plus: Laurent,
    pub minus: Laurent,
    /// prefactor · plus over the denominators written as Pochhammer factors.
    pub element: CocycleElement,
}

impl CocycleFactor {
    pub fn eval_var(&self, var: Complex64) -> Complex64 {
        self.prefactor * self.plus.eval(var) / self.minus.eval(var)
    }
}

fn shift_ratio(jp: &JordanPochhammerWeight, side: Side, chi: i32) -> CocycleFactor {
    let m = jp.modulus();
    let b = side.base(m);
    let prefactor = (2.0 * PI * I * jp.alpha * m.omega * side.step(m) * chi as f64).exp();
    let anchors = |gs: &[Complex64]| gs.iter().map(|g| side.anchor(m, *g)).collect::<Vec<_>>();
    let (c, cp) = (anchors(&jp.gammas), anchors(&jp.gamma_primes));
    let len = chi.unsigned_abs();
    let (plus, minus, factors) = if chi >= 0 {
        let plus = c.iter().fold(Laurent::one(), |acc, a| acc.mul(&Laurent::pochhammer(*a, b, len)));
        let minus = cp.iter().fold(Laurent::one(), |acc, a| acc.mul(&Laurent::pochhammer(*a, b, len)));
        let factors = jp.gamma_primes.iter().map(|g| DenomFactor { gamma: *g, len, kind: FactorKind::Right });
        (plus, minus, factors.collect::<Vec<_>>())
    } else {
        let bchi = b.powi(chi);
        let plus = cp.iter().fold(Laurent::one(), |acc, a| acc.mul(&Laurent::pochhammer(a * bchi, b, len)));
        let minus = c.iter().fold(Laurent::one(), |acc, a| acc.mul(&Laurent::pochhammer(a * bchi, b, len)));
        let factors = jp.gammas.iter().map(|g| DenomFactor { gamma: *g, len, kind: FactorKind::Left });
        (plus, minus, factors.collect::<Vec<_>>())
    };
    let factors = if chi == 0 { Vec::new() } else { factors };
    let element = CocycleElement { side, numerator: plus.scale(prefactor), factors };
    CocycleFactor { side, chi, prefactor, plus, minus, element }
}

/// b_χ(t) = Φ(z+χ)/Φ(z).
pub fn b_chi(jp: &JordanPochhammerWeight, chi: i32) -> CocycleFactor {
    shift_ratio(jp, Side::Q, chi)
}

/// b̃_χ(T) = Φ(z+χ/ω)/Φ(z).
pub fn b_tilde_chi(jp: &JordanPochhammerWeight, chi: i32) -> CocycleFactor {
    shift_ratio(jp, Side::Dual, chi)
}

/// Linear atom (1 − anchor(γ)·base^k·x) with a kind tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct AtomKey {
    kind: FactorKind,
    re: u64,
    im: u64,
    k: i32,
}

impl AtomKey {
    fn new(kind: FactorKind, gamma: Complex64, k: i32) -> Self {
        AtomKey { kind, re: gamma.re.to_bits(), im: gamma.im.to_bits(), k }
    }

    fn gamma(&self) -> Complex64 {
        Complex64::new(f64::from_bits(self.re), f64::from_bits(self.im))
    }

    fn poly(&self, side: Side, m: &ModulusParameters) -> Laurent {
        Laurent::linear(side.anchor(m, self.gamma()) * side.base(m).powi(self.k))
    }
}

/// numerator · ∏ atom^{multiplicity}, kept symbolic so shifted factors cancel exactly.
#[derive(Debug, Clone)]
struct Rational {
    num: Laurent,
    atoms: BTreeMap<AtomKey, i32>,
}

impl Rational {
    fn from_element(e: &CocycleElement) -> Self {
        let mut atoms = BTreeMap::new();
        for f in &e.factors {
            let ks: Vec<i32> = match f.kind {
                FactorKind::Right => (0..f.len as i32).collect(),
                FactorKind::Left => (-(f.len as i32)..0).collect(),
            };
            for k in ks {
                *atoms.entry(AtomKey::new(f.kind, f.gamma, k)).or_insert(0) -= 1;
            }
        }
        Rational { num: e.numerator.clone(), atoms }
    }

    fn from_shift_ratio(jp: &JordanPochhammerWeight, side: Side, chi: i32) -> Self {
        let m = jp.modulus();
        let pref = (2.0 * PI * I * jp.alpha * m.omega * side.step(m) * chi as f64).exp();
        let mut atoms = BTreeMap::new();
        let ks: Vec<i32> = if chi >= 0 { (0..chi).collect() } else { (chi..0).collect() };
        let sign = if chi >= 0 { 1 } else { -1 };
        for k in ks {
            for g in &jp.gammas {
                *atoms.entry(AtomKey::new(FactorKind::Left, *g, k)).or_insert(0) += sign;
            }
            for g in &jp.gamma_primes {
                *atoms.entry(AtomKey::new(FactorKind::Right, *g, k)).or_insert(0) -= sign;
            }
        }
        Rational { num: Laurent::constant(pref), atoms }
    }

    fn mul(&self, other: &Rational) -> Rational {
        let mut atoms = self.atoms.clone();
        for (k, v) in &other.atoms {
            *atoms.entry(*k).or_insert(0) += v;
        }
        atoms.retain(|_, v| *v != 0);
        Rational { num: self.num.mul(&other.num), atoms }
    }

    /// x → base^χ x.
    fn dilate(&self, side: Side, m: &ModulusParameters, chi: i32) -> Rational {
        let atoms = self.atoms.iter().map(|(a, v)| (AtomKey { k: a.k + chi, ..*a }, *v)).collect();
        Rational { num: self.num.dilate(side.base(m).powi(chi)), atoms }
    }

    /// Moves positive multiplicities into the numerator.
    fn expand_positive(&self, side: Side, m: &ModulusParameters) -> Rational {
        let mut num = self.num.clone();
        let mut atoms = BTreeMap::new();
        for (a, v) in &self.atoms {
            if *v > 0 {
                for _ in 0..*v {
                    num = num.mul(&a.poly(side, m));
                }
            } else if *v < 0 {
                atoms.insert(*a, *v);
            }
        }
        Rational { num, atoms }
    }

    fn sub(&self, other: &Rational, side: Side, m: &ModulusParameters) -> Rational {
        let a = self.expand_positive(side, m);
        let b = other.expand_positive(side, m);
        let mut common: BTreeMap<AtomKey, i32> = BTreeMap::new();
        for (k, v) in a.atoms.iter().chain(&b.atoms) {
            let e = common.entry(*k).or_insert(0);
            *e = (*e).min(*v);
        }
        let lift = |r: &Rational| {
            let mut num = r.num.clone();
            for (k, d) in &common {
                let have = r.atoms.get(k).copied().unwrap_or(0);
                for _ in 0..(have - d) {
                    num = num.mul(&k.poly(side, m));
                }
            }
            num
        };
        Rational { num: lift(&a).sub(&lift(&b)), atoms: common }
    }

    fn into_element(self, side: Side, m: &ModulusParameters) -> Result<CocycleElement> {
        let r = self.expand_positive(side, m);
        let mut num = r.num;
        let mut groups: BTreeMap<(FactorKind, u64, u64), Vec<i32>> = BTreeMap::new();
        for (a, v) in &r.atoms {
            if *v < -1 {
                return Err(Error::NotInSpace(format!("repeated denominator factor of multiplicity {}", -v)));
            }
            groups.entry((a.kind, a.re, a.im)).or_default().push(a.k);
        }
        let mut factors = Vec::new();
        for ((kind, re, im), ks) in groups {
            let gamma = Complex64::new(f64::from_bits(re), f64::from_bits(im));
            let (lo, hi) = match kind {
                FactorKind::Right => (0, *ks.iter().max().unwrap()),
                FactorKind::Left => (*ks.iter().min().unwrap(), -1),
            };
            if ks.iter().any(|k| *k < lo || *k > hi) {
                return Err(Error::NotInSpace(format!(
                    "{kind:?} denominator at {gamma} has shifts {ks:?} outside its admissible range"
                )));
            }
            for k in lo..=hi {
                if !ks.contains(&k) {
                    num = num.mul(&AtomKey::new(kind, gamma, k).poly(side, m));
                }
            }
            factors.push(DenomFactor { gamma, len: (hi - lo + 1) as u32, kind });
        }
        Ok(CocycleElement { side, numerator: num.prune(1e-14), factors })
    }
}

/// ψ − b_χ ψ(base^χ x) for ψ on either side, in normal form.
pub fn coboundary_generator(psi: &CocycleElement, jp: &JordanPochhammerWeight, chi: i32) -> Result<CocycleElement> {
    psi.check_against(jp)?;
    let side = psi.side;
    let m = *jp.modulus();
    let r = Rational::from_element(psi);
    let b = Rational::from_shift_ratio(jp, side, chi);
    let shifted = b.mul(&r.dilate(side, &m, chi));
    r.sub(&shifted, side, &m).into_element(side, &m)
}

/// The basis 1/(1 − c′_j t) and 1/(1 − C′_j T), j = 1..n.
pub fn basis_elements(jp: &JordanPochhammerWeight) -> (Vec<CocycleElement>, Vec<CocycleElement>) {
    let q = jp.gamma_primes.iter().map(|g| CocycleElement::basis(Side::Q, *g)).collect();
    let d = jp.gamma_primes.iter().map(|g| CocycleElement::basis(Side::Dual, *g)).collect();
    (q, d)
}

/// ψ_k = 1/(1 − c′_k x) ∏_{j<k}(1 − c_j x)/(1 − c′_j x), k counted from 0.
pub fn triangular_element(jp: &JordanPochhammerWeight, side: Side, k: usize) -> CocycleElement {
    let m = jp.modulus();
    let mut num = Laurent::one();
    let mut factors = Vec::new();
    for j in 0..=k {
        if j < k {
            num = num.mul(&Laurent::linear(side.anchor(m, jp.gammas[j])));
        }
        factors.push(DenomFactor { gamma: jp.gamma_primes[j], len: 1, kind: FactorKind::Right });
    }
    CocycleElement { side, numerator: num, factors }
}

/// Coefficients of ψ_k in the basis 1/(1 − c′_p x), p ≤ k (partial fractions).
pub fn triangular_coefficients(jp: &JordanPochhammerWeight, side: Side, k: usize) -> Vec<Complex64> {
    let m = jp.modulus();
    let c: Vec<Complex64> = jp.gammas.iter().map(|g| side.anchor(m, *g)).collect();
    let cp: Vec<Complex64> = jp.gamma_primes.iter().map(|g| side.anchor(m, *g)).collect();
    let mut out = Vec::with_capacity(k + 1);
    for p in 0..k {
        let mut v = (one() - c[p] / cp[p]) / (one() - cp[k] / cp[p]);
        for j in (0..k).filter(|j| *j != p) {
            v *= (one() - c[j] / cp[p]) / (one() - cp[j] / cp[p]);
        }
        out.push(v);
    }
    let mut last = one();
    for j in 0..k {
        last *= (one() - c[j] / cp[k]) / (one() - cp[j] / cp[k]);
    }
    out.push(last);
    out
}

/// (A−C)(1−BT)/((A−B)(1−CT)) + (B−C)(1−AT)/((B−A)(1−CT)) − 1.
pub fn identity23_residual(a: Complex64, b: Complex64, c: Complex64, t: Complex64) -> Result<Complex64> {
    let scale = a.norm().max(b.norm()).max(1.0);
    if (a - b).norm() <= 1e-14 * scale {
        return Err(Error::Degenerate("A = B".into()));
    }
    if (one() - c * t).norm() <= 1e-14 {
        return Err(Error::Degenerate("C T = 1".into()));
    }
    let lhs = (a - c) * (one() - b * t) / ((a - b) * (one() - c * t))
        + (b - c) * (one() - a * t) / ((b - a) * (one() - c * t));
    Ok(lhs - one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn weight() -> JordanPochhammerWeight {
        let ev = AngleEvaluator::from_omega(FRAC_1_SQRT_2).unwrap();
        JordanPochhammerWeight::new(ev, c(0.37, 0.1), vec![c(1.1, 0.0), c(1.6, 0.2)], vec![c(0.5, 0.0), c(0.8, -0.1)])
            .unwrap()
    }

    #[test]
    fn shift_ratio_matches_weight() {
        let jp = weight();
        let m = *jp.modulus();
        let z = c(-0.3, 0.4);
        for chi in [-2, -1, 1, 2, 3] {
            let b = b_chi(&jp, chi);
            let want = jp.phi(z + chi as f64).unwrap() / jp.phi(z).unwrap();
            let got = b.eval_var(m.torus_q(z));
            assert!((got - want).norm() < 1e-10 * want.norm(), "chi={chi}: {got} vs {want}");
            let via_element = b.element.eval(&m, z);
            assert!((via_element - want).norm() < 1e-10 * want.norm());
            let bt = b_tilde_chi(&jp, chi);
            let want = jp.phi(z + chi as f64 / m.omega).unwrap() / jp.phi(z).unwrap();
            let got = bt.eval_var(m.torus_big_q(z));
            assert!((got - want).norm() < 1e-10 * want.norm(), "chi={chi}: {got} vs {want}");
        }
        let b0 = b_chi(&jp, 0);
        assert_eq!(b0.eval_var(c(0.3, 0.2)), c(1.0, 0.0));
    }

    #[test]
    fn coboundary_matches_definition() {
        let jp = weight();
        let m = *jp.modulus();
        let psis = [
            CocycleElement::one(Side::Q),
            CocycleElement::polynomial(Side::Q, Laurent::monomial(1, c(1.0, 0.0))),
            CocycleElement::basis(Side::Q, jp.gamma_primes[1]),
            CocycleElement::basis(Side::Dual, jp.gamma_primes[0]),
            CocycleElement::polynomial(Side::Dual, Laurent::monomial(-1, c(0.5, 0.5))),
        ];
        for psi in &psis {
            for chi in [-2, -1, 1, 2] {
                let e = coboundary_generator(psi, &jp, chi).unwrap();
                e.check_against(&jp).unwrap();
                let b = shift_ratio(&jp, psi.side, chi);
                let base = psi.side.base(&m);
                for z in [c(0.13, 0.21), c(-0.4, -0.3)] {
                    let x = psi.side.variable(&m, z);
                    let want = psi.eval_var(&m, x) - b.eval_var(x) * psi.eval_var(&m, x * base.powi(chi));
                    let got = e.eval_var(&m, x);
                    assert!((got - want).norm() < 1e-9 * want.norm().max(1.0), "chi={chi}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn outside_space_is_rejected() {
        let jp = weight();
        let stray = CocycleElement::basis(Side::Q, c(0.123, 0.0));
        assert!(matches!(coboundary_generator(&stray, &jp, 1), Err(Error::NotInSpace(_))));
    }

    #[test]
    fn triangular_expansion() {
        let jp = weight();
        let m = *jp.modulus();
        for side in [Side::Q, Side::Dual] {
            let (qb, db) = basis_elements(&jp);
            let basis = if side == Side::Q { qb } else { db };
            for k in 0..2 {
                let psi = triangular_element(&jp, side, k);
                let coef = triangular_coefficients(&jp, side, k);
                for x in [c(0.3, 0.1), c(-1.2, 0.7), c(2.0, -0.4)] {
                    let want = psi.eval_var(&m, x);
                    let got: Complex64 = coef.iter().zip(&basis).map(|(a, e)| a * e.eval_var(&m, x)).sum();
                    assert!((got - want).norm() < 1e-12 * want.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn partial_fraction_identity() {
        let r = identity23_residual(c(0.3, 0.2), c(-0.5, 1.0), c(0.7, -0.2), c(0.1, 0.9)).unwrap();
        assert!(r.norm() < 1e-14);
        assert!(matches!(identity23_residual(c(0.3, 0.2), c(0.3, 0.2), c(1.0, 0.0), c(0.1, 0.0)), Err(Error::Degenerate(_))));
        assert!(matches!(identity23_residual(c(0.3, 0.2), c(0.5, 0.2), c(2.0, 0.0), c(0.5, 0.0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn laurent_arithmetic() {
        let p = Laurent::from_coeffs(-1, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let x = c(0.5, 0.25);
        assert!((p.eval(x) - (x.inv() + 2.0 + 3.0 * x)).norm() < 1e-14);
        assert!((p.mul(&p).eval(x) - p.eval(x) * p.eval(x)).norm() < 1e-12);
        assert!((p.dilate(c(0.0, 2.0)).eval(x) - p.eval(c(0.0, 2.0) * x)).norm() < 1e-12);
        assert!(p.sub(&p).is_zero());
        assert_eq!(p.degree_range(), Some((-1, 1)));
    }
}
