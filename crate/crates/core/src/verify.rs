//! Verification suites.
//!
//! Each suite evaluates a family of identities at fixed fixtures and at seeded
//! random draws around them, and records one row per check. Rows are produced
//! in a fixed order and every number in them is computed deterministically, so
//! a report depends only on its configuration.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{basis_elements, coboundary_generator, CocycleElement, DenomFactor, FactorKind, JordanPochhammerWeight, Laurent, Side};
use crate::contour::QuadSummary;
use crate::doublesine::{sigma, AngleEvaluator, LatticeClass};
use crate::error::{Error, Result};
use crate::jacobi::{gram_matrix, identity29_residual, jacobi_limit_residual};
use crate::pairing::{
    coboundary_pairing, det_pairing_matrix, feasibility_margin, mellin_sato_residual, mellin_sato_residual_dual,
    pair, pair_on_line, prepare, qbeta_closed_form, qbeta_problem, refinement_pair, PairingProblem, Residual,
};
use crate::qcore::ModulusParameters;
use crate::qhyper::{
    connection_residual, connection_terms, decomposition_residual, difference_equation_residual, heine_residuals,
    phi_terminating, psi_residue_corrected_detailed, HGParams,
};

pub const SCHEMA: u32 = 1;

pub const SUITES: [&str; 10] =
    ["doublesine", "qbeta", "det", "cocycle", "heine", "connection", "diffeq", "mellin-sato", "limit", "ortho"];

/// Smallest window margin and gap half-width accepted for fixtures and random draws.
const MIN_MARGIN: f64 = 0.05;
/// Attempts per random draw before giving up.
const MAX_ATTEMPTS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSineFixture {
    pub points: usize,
    pub im_max: f64,
    pub eps: [f64; 2],
}

impl Default for DoubleSineFixture {
    fn default() -> Self {
        DoubleSineFixture { points: 200, im_max: 5.0, eps: [1e-3, 1e-4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QBetaFixture {
    pub alpha: f64,
    pub beta: f64,
    /// Minimum number of random draws, whatever `trials` is.
    pub draws: u32,
}

impl Default for QBetaFixture {
    fn default() -> Self {
        QBetaFixture { alpha: 0.4, beta: 0.9, draws: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetFixture {
    pub alpha: f64,
    pub gammas: Vec<f64>,
    pub gamma_primes: Vec<f64>,
}

impl Default for DetFixture {
    fn default() -> Self {
        DetFixture { alpha: 0.5, gammas: vec![1.1, 1.6], gamma_primes: vec![0.5, 0.8] }
    }
}

/// A parameter point for one annihilation case, named like `psi.Q.chi=2.psi=T`.
/// `dual` evaluates it at 1/ω; some cases have no feasible point at the configured ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocyclePoint {
    pub case: String,
    #[serde(default)]
    pub dual: bool,
    pub params: Vec<f64>,
}

/// Cases without a usable point fall back to a grid search at ω, then at 1/ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CocycleFixture {
    pub chis: Vec<i32>,
    pub points: Vec<CocyclePoint>,
}

/// Largest-margin points of a 0.05 grid at ω = 1/√2 (q-Beta: [α, β] with γ′ = 0; Ψ: [α, β, γ, x]).
const COCYCLE_POINTS: [(&str, bool, &[f64]); 24] = [
    ("qbeta.q.chi=1.psi=1", false, &[0.4123, -0.7629]),
    ("qbeta.q.chi=2.psi=1", false, &[0.1123, -0.2629]),
    ("qbeta.q.chi=1.psi=t", false, &[-0.5877, -0.7629]),
    ("qbeta.q.chi=2.psi=t", false, &[-0.8877, -0.2629]),
    ("qbeta.q.chi=1.psi=basis", false, &[0.4123, 0.2371]),
    ("qbeta.q.chi=2.psi=basis", false, &[0.1123, 0.7371]),
    ("qbeta.Q.chi=1.psi=1", false, &[0.3123, -0.5629]),
    ("qbeta.Q.chi=2.psi=1", true, &[0.1123, -0.1629]),
    ("qbeta.Q.chi=1.psi=T", false, &[-1.1877, -0.4629]),
    ("qbeta.Q.chi=2.psi=T", true, &[-0.6377, -0.1629]),
    ("qbeta.Q.chi=1.psi=basis", false, &[0.2123, 0.9371]),
    ("qbeta.Q.chi=2.psi=basis", true, &[0.1123, 0.5371]),
    ("psi.q.chi=1.psi=1", false, &[2.0123, 2.0371, 2.5517, 0.5079]),
    ("psi.q.chi=2.psi=1", false, &[2.2623, 2.2871, 2.4517, 0.1579]),
    ("psi.q.chi=1.psi=t", false, &[2.0123, 2.0371, 2.5517, -0.4921]),
    ("psi.q.chi=2.psi=t", false, &[2.2623, 2.2871, 2.4517, -0.8421]),
    ("psi.q.chi=1.psi=basis", false, &[2.0123, 2.0371, 1.5517, 0.5079]),
    ("psi.q.chi=2.psi=basis", false, &[2.2623, 2.2871, 1.4517, 0.1579]),
    ("psi.Q.chi=1.psi=1", false, &[2.0123, 2.0371, 2.3017, 0.2579]),
    ("psi.Q.chi=2.psi=1", true, &[1.6123, 1.6371, 1.7517, 0.1079]),
    ("psi.Q.chi=1.psi=T", false, &[2.0123, 2.0371, 2.3017, -0.9921]),
    ("psi.Q.chi=2.psi=T", true, &[1.6123, 1.6371, 1.7517, -0.5921]),
    ("psi.Q.chi=1.psi=basis", false, &[2.0123, 2.0371, 1.0517, 0.5079]),
    ("psi.Q.chi=2.psi=basis", true, &[1.5623, 1.5871, 0.9517, 0.1079]),
];

impl Default for CocycleFixture {
    fn default() -> Self {
        // The same point serves χ and −χ.
        let points = COCYCLE_POINTS
            .iter()
            .flat_map(|(case, dual, params)| {
                [case.to_string(), case.replacen("chi=", "chi=-", 1)]
                    .map(|case| CocyclePoint { case, dual: *dual, params: params.to_vec() })
            })
            .collect();
        CocycleFixture { chis: vec![-2, -1, 1, 2], points }
    }
}

/// Ψ parameters are written as [α, β, γ, x].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeineFixture {
    pub params: [f64; 4],
    pub cocycle_params: [f64; 4],
}

impl Default for HeineFixture {
    fn default() -> Self {
        HeineFixture { params: [0.4, 1.2, 1.3, 0.3], cocycle_params: [0.4, 1.2, 0.9, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectionFixture {
    pub params: Vec<[f64; 4]>,
}

impl Default for ConnectionFixture {
    fn default() -> Self {
        ConnectionFixture { params: vec![[0.4, 1.2, 1.3, 0.3], [0.3, 0.8, 1.1, 0.5]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffeqFixture {
    pub params: [f64; 4],
    pub cocycle_params: [f64; 4],
}

impl Default for DiffeqFixture {
    fn default() -> Self {
        DiffeqFixture { params: [0.4, 1.2, 2.0, 0.3], cocycle_params: [0.4, 1.2, 1.3, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MellinSatoFixture {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_prime: f64,
    pub chis: Vec<i32>,
}

impl Default for MellinSatoFixture {
    fn default() -> Self {
        MellinSatoFixture { alpha: 0.4, beta: 3.0, gamma_prime: 4.9, chis: vec![1, -1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitFixture {
    pub beta: f64,
    pub gamma: f64,
    pub x: f64,
    pub ns: Vec<u32>,
    pub eps: [f64; 2],
    /// Exponents (a, b) and point x for p_n^{(a,b)}(q^x).
    pub jacobi: [f64; 3],
    pub jacobi_n: u32,
}

impl Default for LimitFixture {
    fn default() -> Self {
        LimitFixture { beta: 1.2, gamma: 1.3, x: 0.3, ns: vec![0, 1, 2], eps: [1e-3, 1e-4], jacobi: [0.3, 0.2, 0.3], jacobi_n: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrthoFixture {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_degree: u32,
    pub identity_max_degree: u32,
}

impl Default for OrthoFixture {
    fn default() -> Self {
        OrthoFixture { omega: SQRT_2 / 16.0, alpha: 0.3, beta: 6.0, max_degree: 2, identity_max_degree: 3 }
    }
}

/// Every fixture of every suite. A JSON file with any subset of these keys overrides the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fixtures {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub doublesine: DoubleSineFixture,
    pub qbeta: QBetaFixture,
    pub det: DetFixture,
    pub cocycle: CocycleFixture,
    pub heine: HeineFixture,
    pub connection: ConnectionFixture,
    pub diffeq: DiffeqFixture,
    pub mellin_sato: MellinSatoFixture,
    pub limit: LimitFixture,
    pub ortho: OrthoFixture,
}

impl Fixtures {
    pub fn from_json(text: &str) -> Result<Fixtures> {
        serde_json::from_str(text).map_err(|e| Error::Domain(format!("invalid fixtures file: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub omega: f64,
    pub tol: f64,
    pub suite_tol: f64,
    pub trials: u32,
    pub seed: u64,
    pub fixtures: Fixtures,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { omega: FRAC_1_SQRT_2, tol: 1e-10, suite_tol: 1e-8, trials: 5, seed: 1, fixtures: Fixtures::default() }
    }
}

impl RunConfig {
    /// ω of the run; a fixtures file may pin it.
    pub fn effective_omega(&self) -> f64 {
        self.fixtures.omega.unwrap_or(self.omega)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("tol", self.tol), ("suite_tol", self.suite_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        ModulusParameters::new(self.effective_omega())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "skipped(infeasible)")]
    SkippedInfeasible,
    #[serde(rename = "error")]
    Error,
}

/// One residual: |value| / scale is compared against `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
    pub threshold: f64,
    pub pass: bool,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub quadrature: QuadSummary,
}

impl CheckRow {
    fn from_residual(check: impl Into<String>, r: Result<Residual>, threshold: f64) -> CheckRow {
        match r {
            Ok(r) => {
                let relative = r.relative();
                let pass = relative <= threshold;
                CheckRow {
                    check: check.into(),
                    residual: r.value.norm(),
                    scale: r.scale,
                    relative,
                    threshold,
                    pass,
                    status: if pass { Status::Ok } else { Status::Fail },
                    detail: None,
                    quadrature: r.quad,
                }
            }
            Err(e) => CheckRow::failed(check, &e, threshold),
        }
    }

    fn failed(check: impl Into<String>, e: &Error, threshold: f64) -> CheckRow {
        CheckRow {
            check: check.into(),
            residual: f64::NAN,
            scale: f64::NAN,
            relative: f64::NAN,
            threshold,
            pass: false,
            status: if e.is_infeasible() { Status::SkippedInfeasible } else { Status::Error },
            detail: Some(e.to_string()),
            quadrature: QuadSummary::default(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> CheckRow {
        if self.detail.is_none() {
            self.detail = Some(detail.into());
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub suite: String,
    pub version: String,
    pub omega: f64,
    pub seed: u64,
    pub tol: f64,
    pub suite_tol: f64,
    pub trials: u32,
    pub fixtures: Fixtures,
    pub checks: Vec<CheckRow>,
    pub quadrature: QuadSummary,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs one suite, or every suite for `"all"`.
pub fn run_suite(suite: &str, config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(Error::Domain(format!("unknown suite {s:?}; expected one of {} or all", SUITES.join(", ")))),
    };
    let omega = config.effective_omega();
    let checks: Vec<CheckRow> = names
        .iter()
        .flat_map(|name| {
            let mut rows = suite_rows(name, config, omega);
            if names.len() > 1 {
                for r in &mut rows {
                    r.check = format!("{name}.{}", r.check);
                }
            }
            rows
        })
        .collect();
    let quadrature = checks.iter().fold(QuadSummary::default(), |acc, r| acc.merge(r.quadrature));
    let pass = !checks.is_empty() && checks.iter().all(|r| r.pass);
    Ok(VerificationReport {
        schema: SCHEMA,
        suite: suite.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        omega,
        seed: config.seed,
        tol: config.tol,
        suite_tol: config.suite_tol,
        trials: config.trials,
        fixtures: config.fixtures.clone(),
        checks,
        quadrature,
        pass,
    })
}

type Job<'a> = Box<dyn Fn() -> Vec<CheckRow> + Send + Sync + 'a>;

/// Runs jobs in parallel and concatenates their rows in job order.
fn run_jobs(jobs: Vec<Job<'_>>) -> Vec<CheckRow> {
    let out: Vec<Vec<CheckRow>> = jobs.par_iter().map(|j| j()).collect();
    out.into_iter().flatten().collect()
}

fn suite_rows(name: &str, config: &RunConfig, omega: f64) -> Vec<CheckRow> {
    let ev = match AngleEvaluator::from_omega(omega) {
        Ok(ev) => ev,
        Err(e) => return vec![CheckRow::failed(format!("{name}.setup"), &e, config.suite_tol)],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ suite_salt(name));
    match name {
        "doublesine" => doublesine_suite(&ev, config, &mut rng),
        "qbeta" => qbeta_suite(&ev, config, &mut rng),
        "det" => det_suite(&ev, config, &mut rng),
        "cocycle" => cocycle_suite(&ev, config, &mut rng),
        "heine" => heine_suite(&ev, config, &mut rng),
        "connection" => connection_suite(&ev, config, &mut rng),
        "diffeq" => diffeq_suite(&ev, config, &mut rng),
        "mellin-sato" => mellin_sato_suite(&ev, config, &mut rng),
        "limit" => limit_suite(&ev, config, &mut rng),
        "ortho" => ortho_suite(config, &mut rng),
        _ => unreachable!("suite names are checked by run_suite"),
    }
}

/// FNV-1a of the suite name, so each suite has its own stream for a given seed.
fn suite_salt(name: &str) -> u64 {
    name.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Draws `n` points uniformly within `radius` of `base` (per coordinate) that pass `accept`.
fn draws(rng: &mut ChaCha8Rng, base: &[f64], radius: f64, n: u32, accept: impl Fn(&[f64]) -> bool) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        for _ in 0..MAX_ATTEMPTS {
            let p: Vec<f64> = base.iter().map(|b| b + rng.gen_range(-radius..radius)).collect();
            if accept(&p) {
                out.push(p);
                break;
            }
        }
    }
    out
}

fn exhausted_row(check: &str, got: usize, wanted: u32, threshold: f64) -> Option<CheckRow> {
    (got < wanted as usize).then(|| {
        CheckRow::failed(
            check,
            &Error::infeasible(check, Error::Divergent(format!("found {got} of {wanted} feasible draws"))),
            threshold,
        )
    })
}

fn fmt_params(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(","))
}

fn margin_ok(problem: &PairingProblem) -> bool {
    feasibility_margin(problem).map(|m| m >= MIN_MARGIN).unwrap_or(false)
}

// ---------------------------------------------------------------- doublesine

fn doublesine_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = &config.fixtures.doublesine;
    let m = *ev.modulus();
    let omega = m.omega;
    let w = ev.w_big();
    let mut rows = Vec::new();

    let want = Complex64::new(0.0, 1.0 / omega.sqrt());
    let one = ev.angle_one();
    rows.push(CheckRow::from_residual("angle_one", Ok(Residual::new(one - want, want.norm())), 1e-12));

    let mut points = Vec::with_capacity(f.points);
    while points.len() < f.points {
        let x = Complex64::new(rng.gen_range(-1.0..w + 1.0), rng.gen_range(-f.im_max..f.im_max));
        let clear = [x, x + 1.0, x + 1.0 / omega, w - x]
            .iter()
            .all(|y| matches!(ev.classify(*y, 1e-3), LatticeClass::Regular));
        if clear {
            points.push(x);
        }
    }
    let per_point: Vec<Result<[f64; 3]>> = points
        .par_iter()
        .map(|&x| {
            let a = ev.angle(x)?;
            let shift_q = ev.angle(x + 1.0)? * (1.0 - m.torus_q(x));
            let shift_big_q = ev.angle(x + 1.0 / omega)? * (1.0 - m.torus_big_q(x));
            let s = sigma(&m, x);
            let refl = a * ev.angle(w - x)?;
            Ok([(shift_q - a).norm() / a.norm(), (shift_big_q - a).norm() / a.norm(), (refl - s).norm() / s.norm()])
        })
        .collect();
    for (k, name) in ["shift_q", "shift_big_q", "reflection"].iter().enumerate() {
        let mut worst = 0.0f64;
        let mut err = None;
        for r in &per_point {
            match r {
                Ok(v) => worst = worst.max(v[k]),
                Err(e) => err = Some(e.clone()),
            }
        }
        let check = format!("{name}[{} points]", points.len());
        rows.push(match err {
            Some(e) => CheckRow::failed(check, &e, 1e-10),
            None => CheckRow::from_residual(check, Ok(Residual::new(c(worst), 1.0)), 1e-10),
        });
    }

    let slope = 2.0 * PI * omega.sqrt();
    let errs: Vec<Result<f64>> = f.eps.iter().map(|&e| Ok((ev.angle_re(e)? / e - slope).norm() / slope)).collect();
    for (e, r) in f.eps.iter().zip(&errs) {
        let check = format!("slope[eps={e:e}]");
        rows.push(CheckRow::from_residual(check, r.clone().map(|v| Residual::new(c(v), 1.0)), 10.0 * e));
    }
    rows.push(rate_row("slope_rate", &errs, &f.eps));
    rows
}

/// First-order convergence: err(ε₀)/err(ε₁) should be ε₀/ε₁; passes within a factor of 2.
fn rate_row(check: &str, errs: &[Result<f64>], eps: &[f64; 2]) -> CheckRow {
    match (&errs[0], &errs[1]) {
        (Ok(a), Ok(b)) => {
            let expected = eps[0] / eps[1];
            let ratio = a / b;
            let dev = (ratio / expected - 1.0).abs();
            CheckRow::from_residual(check, Ok(Residual::new(c(dev), 1.0)), 0.5)
                .with_detail(format!("error ratio {ratio:.4}, expected {expected:.4}"))
        }
        (Err(e), _) | (_, Err(e)) => CheckRow::failed(check, e, 0.5),
    }
}

// ---------------------------------------------------------------- qbeta

fn qbeta_residual(ev: &AngleEvaluator, a: f64, b: f64, tol: f64) -> Result<Residual> {
    let problem = qbeta_problem(ev, c(a), c(b), tol)?;
    let o = pair(&problem)?;
    let closed = qbeta_closed_form(ev, c(a), c(b))?;
    Ok(Residual::new(o.value - closed, closed.norm()).with_quad(QuadSummary::of(&o.quad)))
}

/// |fine − coarse| against the coarse error estimate plus a rounding floor.
fn refinement_row(check: &str, problem: Result<PairingProblem>) -> CheckRow {
    let r = problem.and_then(|p| refinement_pair(&p)).map(|(coarse, fine)| {
        let bound = coarse.quad.error_bound() + 64.0 * f64::EPSILON * coarse.quad.scale;
        Residual::new(fine.value - coarse.value, bound).with_quad(QuadSummary::of(&coarse.quad).merge(QuadSummary::of(&fine.quad)))
    });
    CheckRow::from_residual(check, r, 1.0)
}

fn qbeta_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = &config.fixtures.qbeta;
    let (tol, st) = (config.tol, config.suite_tol);
    let (a, b) = (f.alpha, f.beta);
    let feasible =
        |p: &[f64]| qbeta_problem(ev, c(p[0]), c(p[1]), tol).map(|pr| margin_ok(&pr)).unwrap_or(false);
    let n_draws = config.trials.max(f.draws);
    let trial_points = draws(rng, &[a, b], 0.5, n_draws, feasible);
    let mut jobs: Vec<Job> = vec![
        Box::new(move || vec![CheckRow::from_residual(format!("closed_form{}", fmt_params(&[a, b])), qbeta_residual(ev, a, b, tol), st)]),
        Box::new(move || {
            // Same integral on lines at one third and two thirds of the gap.
            let r = qbeta_problem(ev, c(a), c(b), tol).and_then(|p| {
                let (abs, _) = prepare(&p)?;
                let (l, r) = abs.gap();
                let o1 = pair_on_line(&p, l + (r - l) / 3.0)?;
                let o2 = pair_on_line(&p, l + 2.0 * (r - l) / 3.0)?;
                Ok(Residual::new(o1.value - o2.value, o1.value.norm())
                    .with_quad(QuadSummary::of(&o1.quad).merge(QuadSummary::of(&o2.quad))))
            });
            vec![CheckRow::from_residual("offset_independence", r, 1e-10)]
        }),
        Box::new(move || vec![refinement_row("engine_refinement", qbeta_problem(ev, c(a), c(b), tol))]),
    ];
    for (k, p) in trial_points.iter().enumerate() {
        let p = p.clone();
        jobs.push(Box::new(move || {
            vec![CheckRow::from_residual(format!("trial[{k}]{}", fmt_params(&p)), qbeta_residual(ev, p[0], p[1], tol), st)]
        }));
    }
    let mut rows = run_jobs(jobs);
    rows.extend(exhausted_row("trials", trial_points.len(), n_draws, st));
    rows
}

// ---------------------------------------------------------------- det

const DET_TOL: f64 = 1e-6;

fn det_weight(ev: &AngleEvaluator, alpha: f64, gammas: &[f64], gamma_primes: &[f64]) -> Result<JordanPochhammerWeight> {
    JordanPochhammerWeight::new(
        ev.clone(),
        c(alpha),
        gammas.iter().map(|g| c(*g)).collect(),
        gamma_primes.iter().map(|g| c(*g)).collect(),
    )
}

fn det_feasible(jp: &JordanPochhammerWeight, tol: f64) -> bool {
    let (qs, ds) = basis_elements(jp);
    qs.iter().all(|phi| ds.iter().all(|pt| margin_ok(&PairingProblem::new(jp.clone(), phi.clone(), pt.clone(), tol))))
}

fn det_residual(jp: &JordanPochhammerWeight, tol: f64) -> Result<Residual> {
    let d = det_pairing_matrix(jp, tol)?;
    let quad = d.quads.iter().fold(QuadSummary::default(), |acc, q| acc.merge(QuadSummary::of(q)));
    Ok(Residual::new(d.det - d.closed_form, d.closed_form.norm()).with_quad(quad))
}

fn det_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = config.fixtures.det.clone();
    let q = config.fixtures.qbeta.clone();
    let tol = config.tol;
    let n = f.gammas.len();
    let mut base = vec![f.alpha];
    base.extend(&f.gammas);
    base.extend(&f.gamma_primes);
    let split = |p: &[f64]| (p[0], p[1..=n].to_vec(), p[n + 1..].to_vec());
    let feasible = |p: &[f64]| {
        let (a, g, gp) = split(p);
        det_weight(ev, a, &g, &gp).map(|jp| jp.is_generic(1e-6) && det_feasible(&jp, tol)).unwrap_or(false)
    };
    let trial_points = draws(rng, &base, 0.2, config.trials, feasible);
    let mut jobs: Vec<Job> = vec![
        Box::new(move || {
            // n = 1 goes through the same pairing as the q-Beta integral.
            let r = (|| {
                let zero = [0.0];
                let jp = det_weight(ev, q.alpha, &[q.beta], &zero)?;
                let d = det_pairing_matrix(&jp, tol)?;
                let o = pair(&qbeta_problem(ev, c(q.alpha), c(q.beta), tol)?)?;
                Ok(Residual::new(d.det - o.value, o.value.norm()).with_quad(QuadSummary::of(&o.quad)))
            })();
            vec![CheckRow::from_residual("n1_matches_qbeta", r, 0.0)]
        }),
        Box::new(move || {
            let r = det_weight(ev, q.alpha, &[q.beta], &[0.0]).and_then(|jp| det_residual(&jp, tol));
            vec![CheckRow::from_residual("n1_closed_form", r, DET_TOL)]
        }),
    ];
    {
        let (a, g, gp) = split(&base);
        jobs.push(Box::new(move || {
            let r = det_weight(ev, a, &g, &gp).and_then(|jp| det_residual(&jp, tol));
            vec![CheckRow::from_residual(format!("n{n}_closed_form"), r, DET_TOL)]
        }));
    }
    for (k, p) in trial_points.iter().enumerate() {
        let (a, g, gp) = split(p);
        let label = fmt_params(p);
        jobs.push(Box::new(move || {
            let r = det_weight(ev, a, &g, &gp).and_then(|jp| det_residual(&jp, tol));
            vec![CheckRow::from_residual(format!("trial[{k}]{label}"), r, DET_TOL)]
        }));
    }
    let mut rows = run_jobs(jobs);
    rows.extend(exhausted_row("trials", trial_points.len(), config.trials, DET_TOL));
    rows
}

// ---------------------------------------------------------------- cocycle

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum KernelKind {
    QBeta,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum PsiChoice {
    One,
    Monomial,
    Basis,
}

impl PsiChoice {
    fn label(self, side: Side) -> &'static str {
        match (self, side) {
            (PsiChoice::One, _) => "1",
            (PsiChoice::Monomial, Side::Q) => "t",
            (PsiChoice::Monomial, Side::Dual) => "T",
            (PsiChoice::Basis, _) => "basis",
        }
    }
}

/// A kernel for the annihilation check; parameters are [α, β] for the q-Beta
/// kernel (γ′ = 0) and [α, β, γ, x] for the Ψ kernel.
fn cocycle_kernel(ev: &AngleEvaluator, kind: KernelKind, p: &[f64]) -> Result<JordanPochhammerWeight> {
    match kind {
        KernelKind::QBeta => JordanPochhammerWeight::new(ev.clone(), c(p[0]), vec![c(p[1])], vec![c(0.0)]),
        KernelKind::Psi => HGParams::new(ev.clone(), c(p[0]), c(p[1]), c(p[2]), c(p[3])).kernel(),
    }
}

fn cocycle_psi(jp: &JordanPochhammerWeight, side: Side, choice: PsiChoice) -> CocycleElement {
    match choice {
        PsiChoice::One => CocycleElement::one(side),
        PsiChoice::Monomial => CocycleElement::polynomial(side, Laurent::monomial(1, c(1.0))),
        PsiChoice::Basis => CocycleElement::basis(side, *jp.gamma_primes.last().unwrap()),
    }
}

fn side_problem(jp: &JordanPochhammerWeight, e: CocycleElement, tol: f64) -> PairingProblem {
    match e.side {
        Side::Q => PairingProblem::new(jp.clone(), e, CocycleElement::one(Side::Dual), tol),
        Side::Dual => PairingProblem::new(jp.clone(), CocycleElement::one(Side::Q), e, tol),
    }
}

/// Margin of both ψ and its coboundary; the split ∫Φψ − ∫Φ b ψ(shift) needs ψ itself to converge.
fn cocycle_margin(ev: &AngleEvaluator, kind: KernelKind, side: Side, choice: PsiChoice, chi: i32, p: &[f64]) -> Option<f64> {
    let jp = cocycle_kernel(ev, kind, p).ok()?;
    if !jp.is_generic(1e-6) {
        return None;
    }
    let psi = cocycle_psi(&jp, side, choice);
    let e = coboundary_generator(&psi, &jp, chi).ok()?;
    let m1 = feasibility_margin(&side_problem(&jp, psi, 1.0)).ok()?;
    let m2 = feasibility_margin(&side_problem(&jp, e, 1.0)).ok()?;
    Some(m1.min(m2))
}

/// Grid of candidate parameters. Offsets keep the points away from accidental lattice coincidences.
fn cocycle_grid(kind: KernelKind) -> Vec<Vec<f64>> {
    let axis = |lo: f64, hi: f64, step: f64, off: f64| -> Vec<f64> {
        let n = ((hi - lo) / step).round() as i64;
        (0..=n).map(|i| lo + i as f64 * step + off).collect()
    };
    let mut out = Vec::new();
    match kind {
        KernelKind::QBeta => {
            for a in axis(-3.0, 3.0, 0.1, 0.0123) {
                for b in axis(-3.0, 3.0, 0.1, 0.0371) {
                    out.push(vec![a, b]);
                }
            }
        }
        KernelKind::Psi => {
            for a in axis(-1.0, 2.0, 0.25, 0.0123) {
                for b in axis(-1.0, 2.0, 0.25, 0.0371) {
                    if b <= a {
                        continue;
                    }
                    for g in axis(-1.0, 3.0, 0.25, 0.0517) {
                        for x in axis(-3.0, 3.0, 0.25, 0.0079) {
                            out.push(vec![a, b, g, x]);
                        }
                    }
                }
            }
        }
    }
    out
}

type CocycleKey = (KernelKind, Side, PsiChoice, i32, u64);
type CocycleCache = Mutex<HashMap<CocycleKey, Option<(Vec<f64>, f64)>>>;

/// The grid point with the largest margin (first one on ties), cached per process.
fn cocycle_fixture(ev: &AngleEvaluator, kind: KernelKind, side: Side, choice: PsiChoice, chi: i32) -> Option<(Vec<f64>, f64)> {
    static CACHE: OnceLock<CocycleCache> = OnceLock::new();
    let key = (kind, side, choice, chi, ev.omega().to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return hit.clone();
    }
    let grid = cocycle_grid(kind);
    let margins: Vec<Option<f64>> = grid.par_iter().map(|p| cocycle_margin(ev, kind, side, choice, chi, p)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in margins.iter().enumerate() {
        if let Some(m) = *m {
            if m >= MIN_MARGIN && best.is_none_or(|(_, b)| m > b) {
                best = Some((i, m));
            }
        }
    }
    let found = best.map(|(i, m)| (grid[i].clone(), m));
    cache.lock().unwrap().insert(key, found.clone());
    found
}

fn cocycle_case_name(kind: KernelKind, side: Side, choice: PsiChoice, chi: i32) -> String {
    let kname = match kind {
        KernelKind::QBeta => "qbeta",
        KernelKind::Psi => "psi",
    };
    let sname = match side {
        Side::Q => "q",
        Side::Dual => "Q",
    };
    format!("{kname}.{sname}.chi={chi}.psi={}", choice.label(side))
}

fn cocycle_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let tol = config.tol;
    let st = config.suite_tol;
    let dual_ev = AngleEvaluator::from_omega(1.0 / ev.omega()).ok();
    let mut cases = Vec::new();
    for kind in [KernelKind::QBeta, KernelKind::Psi] {
        for side in [Side::Q, Side::Dual] {
            for choice in [PsiChoice::One, PsiChoice::Monomial, PsiChoice::Basis] {
                for &chi in &config.fixtures.cocycle.chis {
                    cases.push((kind, side, choice, chi));
                }
            }
        }
    }
    // Point selection is deterministic; do it sequentially so draws consume the stream in case order.
    let mut planned = Vec::new();
    for &(kind, side, choice, chi) in &cases {
        let base = cocycle_case_name(kind, side, choice, chi);
        let usable = |e: &AngleEvaluator, p: &[f64]| {
            cocycle_margin(e, kind, side, choice, chi, p).filter(|m| *m >= MIN_MARGIN).map(|m| (p.to_vec(), m))
        };
        let mut chosen = config.fixtures.cocycle.points.iter().find(|pt| pt.case == base).and_then(|pt| {
            let e = if pt.dual { dual_ev.clone()? } else { ev.clone() };
            usable(&e, &pt.params).map(|f| (e, f))
        });
        if chosen.is_none() {
            chosen = cocycle_fixture(ev, kind, side, choice, chi).map(|f| (ev.clone(), f));
        }
        if chosen.is_none() {
            if let Some(d) = &dual_ev {
                chosen = cocycle_fixture(d, kind, side, choice, chi).map(|f| (d.clone(), f));
            }
        }
        let trials = chosen.as_ref().map(|(e, (p, m))| {
            draws(rng, p, 0.5 * m, config.trials, |q| {
                cocycle_margin(e, kind, side, choice, chi, q).is_some_and(|mm| mm >= MIN_MARGIN)
            })
        });
        planned.push(((kind, side, choice, chi), base, chosen, trials));
    }
    let jobs: Vec<Job> = planned
        .into_iter()
        .map(|((kind, side, choice, chi), base, chosen, trials)| -> Job {
            Box::new(move || {
                let Some((e, (p, _))) = chosen.clone() else {
                    let err = Error::infeasible(&base, Error::Divergent("no parameter point with a window and gap for ψ and its coboundary".into()));
                    return vec![CheckRow::failed(base.clone(), &err, st)];
                };
                let eval = |q: &[f64]| {
                    cocycle_kernel(&e, kind, q).and_then(|jp| coboundary_pairing(&jp, &cocycle_psi(&jp, side, choice), chi, tol))
                };
                let mut rows = vec![CheckRow::from_residual(format!("{base}{}[omega={:.6}]", fmt_params(&p), e.omega()), eval(&p), st)];
                let trials = trials.clone().unwrap_or_default();
                for (k, q) in trials.iter().enumerate() {
                    rows.push(CheckRow::from_residual(format!("{base}.trial[{k}]{}", fmt_params(q)), eval(q), st));
                }
                rows.extend(exhausted_row(&format!("{base}.trials"), trials.len(), config.trials, st));
                rows
            })
        })
        .collect();
    run_jobs(jobs)
}

// ---------------------------------------------------------------- Ψ-based suites

fn hg(ev: &AngleEvaluator, p: &[f64]) -> HGParams {
    HGParams::real(ev, p[0], p[1], p[2], p[3])
}

/// The Right(γ) element 1/(1 − C T) on the dual side.
fn gamma_element(p: &HGParams) -> CocycleElement {
    CocycleElement::one(Side::Dual).with_factor(DenomFactor { gamma: p.gamma, len: 1, kind: FactorKind::Right })
}

fn psi_points_feasible(points: &[HGParams], phi_tilde: Option<&CocycleElement>, tol: f64) -> bool {
    points.iter().all(|q| {
        let Ok(jp) = q.kernel() else { return false };
        if q.prefactor().is_err() {
            return false;
        }
        let pt = phi_tilde.cloned().unwrap_or_else(|| CocycleElement::one(Side::Dual));
        margin_ok(&PairingProblem::new(jp, CocycleElement::one(Side::Q), pt, tol))
    })
}

fn heine_points(p: &HGParams) -> Vec<HGParams> {
    [(0., 0., 0.), (0., 0., -1.), (1., 1., 1.), (1., 0., 0.), (1., -1., 0.), (1., 0., 1.)]
        .iter()
        .map(|&(a, b, g)| p.shifted(a, b, g, 0.0))
        .collect()
}

fn diffeq_points(p: &HGParams) -> Vec<HGParams> {
    (0..3).map(|k| p.shifted(0.0, 0.0, 0.0, k as f64)).collect()
}

fn connection_points(p: &HGParams) -> Vec<HGParams> {
    let mut v = vec![p.clone()];
    if let Ok([(_, p1), (_, p2)]) = connection_terms(p) {
        v.push(p1);
        v.push(p2);
    } else {
        v.clear();
    }
    v
}

fn heine_rows(check: String, p: HGParams, phi_tilde: Option<CocycleElement>, tol: f64, st: f64) -> Vec<CheckRow> {
    match heine_residuals(&p, phi_tilde.as_ref(), tol) {
        Ok(rs) => rs.iter().enumerate().map(|(i, r)| CheckRow::from_residual(format!("{check}.r{}", i + 1), Ok(*r), st)).collect(),
        Err(e) => (1..=3).map(|i| CheckRow::failed(format!("{check}.r{i}"), &e, st)).collect(),
    }
}

fn heine_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = &config.fixtures.heine;
    let (tol, st) = (config.tol, config.suite_tol);
    let plain = f.params;
    let with = f.cocycle_params;
    let plain_trials = draws(rng, &plain, 0.3, config.trials, |q| {
        let p = hg(ev, q);
        p.beta.re >= 1.0 && psi_points_feasible(&heine_points(&p), None, tol)
    });
    let with_trials = draws(rng, &with, 0.3, config.trials, |q| {
        let p = hg(ev, q);
        p.beta.re >= 1.0 && psi_points_feasible(&heine_points(&p), Some(&gamma_element(&p)), tol)
    });
    let mut jobs: Vec<Job> = vec![
        Box::new(move || heine_rows(format!("fixture{}", fmt_params(&plain)), hg(ev, &plain), None, tol, st)),
        Box::new(move || {
            let p = hg(ev, &with);
            let e = gamma_element(&p);
            heine_rows(format!("cocycle_fixture{}", fmt_params(&with)), p, Some(e), tol, st)
        }),
        Box::new(move || {
            let p = hg(ev, &plain);
            let problem = p.kernel().map(|jp| PairingProblem::plain(jp, tol));
            vec![refinement_row("engine_refinement", problem)]
        }),
    ];
    for (k, q) in plain_trials.iter().enumerate() {
        let q = q.clone();
        jobs.push(Box::new(move || heine_rows(format!("trial[{k}]{}", fmt_params(&q)), hg(ev, &q), None, tol, st)));
    }
    for (k, q) in with_trials.iter().enumerate() {
        let q = q.clone();
        jobs.push(Box::new(move || {
            let p = hg(ev, &q);
            let e = gamma_element(&p);
            heine_rows(format!("cocycle_trial[{k}]{}", fmt_params(&q)), p, Some(e), tol, st)
        }));
    }
    let mut rows = run_jobs(jobs);
    rows.extend(exhausted_row("trials", plain_trials.len(), config.trials, st));
    rows.extend(exhausted_row("cocycle_trials", with_trials.len(), config.trials, st));
    rows
}

fn connection_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = &config.fixtures.connection;
    let (tol, st) = (config.tol, config.suite_tol);
    let mut jobs: Vec<Job> = Vec::new();
    for p in f.params.clone() {
        jobs.push(Box::new(move || {
            let q = hg(ev, &p);
            vec![
                CheckRow::from_residual(format!("connection{}", fmt_params(&p)), connection_residual(&q, tol), st),
                CheckRow::from_residual(format!("decomposition{}", fmt_params(&p)), decomposition_residual(&q, tol), st),
            ]
        }));
    }
    let mut trials = Vec::new();
    if let Some(base) = f.params.first() {
        trials = draws(rng, base, 0.3, config.trials, |q| {
            let p = hg(ev, q);
            let pts = connection_points(&p);
            !pts.is_empty() && psi_points_feasible(&pts, None, tol) && {
                let [e1, e2] = crate::qhyper::connection_elements(&p);
                psi_points_feasible(std::slice::from_ref(&p), Some(&e1), tol) && psi_points_feasible(std::slice::from_ref(&p), Some(&e2), tol)
            }
        });
    }
    for (k, q) in trials.iter().enumerate() {
        let q = q.clone();
        jobs.push(Box::new(move || {
            let p = hg(ev, &q);
            vec![
                CheckRow::from_residual(format!("connection.trial[{k}]{}", fmt_params(&q)), connection_residual(&p, tol), st),
                CheckRow::from_residual(format!("decomposition.trial[{k}]{}", fmt_params(&q)), decomposition_residual(&p, tol), st),
            ]
        }));
    }
    let mut rows = run_jobs(jobs);
    rows.extend(exhausted_row("trials", trials.len(), config.trials, st));
    rows
}

fn diffeq_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = &config.fixtures.diffeq;
    let (tol, st) = (config.tol, config.suite_tol);
    let plain = f.params;
    let with = f.cocycle_params;
    let plain_trials =
        draws(rng, &plain, 0.3, config.trials, |q| psi_points_feasible(&diffeq_points(&hg(ev, q)), None, tol));
    let with_trials = draws(rng, &with, 0.3, config.trials, |q| {
        let p = hg(ev, q);
        psi_points_feasible(&diffeq_points(&p), Some(&gamma_element(&p)), tol)
    });
    let mut jobs: Vec<Job> = vec![
        Box::new(move || {
            vec![CheckRow::from_residual(format!("fixture{}", fmt_params(&plain)), difference_equation_residual(&hg(ev, &plain), None, tol), st)]
        }),
        Box::new(move || {
            let p = hg(ev, &with);
            let e = gamma_element(&p);
            vec![CheckRow::from_residual(format!("cocycle_fixture{}", fmt_params(&with)), difference_equation_residual(&p, Some(&e), tol), st)]
        }),
    ];
    for (k, q) in plain_trials.iter().enumerate() {
        let q = q.clone();
        jobs.push(Box::new(move || {
            vec![CheckRow::from_residual(format!("trial[{k}]{}", fmt_params(&q)), difference_equation_residual(&hg(ev, &q), None, tol), st)]
        }));
    }
    for (k, q) in with_trials.iter().enumerate() {
        let q = q.clone();
        jobs.push(Box::new(move || {
            let p = hg(ev, &q);
            let e = gamma_element(&p);
            vec![CheckRow::from_residual(format!("cocycle_trial[{k}]{}", fmt_params(&q)), difference_equation_residual(&p, Some(&e), tol), st)]
        }));
    }
    let mut rows = run_jobs(jobs);
    rows.extend(exhausted_row("trials", plain_trials.len(), config.trials, st));
    rows.extend(exhausted_row("cocycle_trials", with_trials.len(), config.trials, st));
    rows
}

// ---------------------------------------------------------------- Mellin–Sato

fn mellin_sato_feasible(ev: &AngleEvaluator, p: &[f64], chis: &[i32], tol: f64) -> bool {
    let Ok(jp) = JordanPochhammerWeight::new(ev.clone(), c(p[0]), vec![c(p[1])], vec![c(p[2])]) else { return false };
    let reach = chis.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
    (0..=reach).all(|k| {
        let q = PairingProblem::plain(jp.with_alpha(jp.alpha + k as f64), tol);
        let d = PairingProblem::plain(jp.with_alpha(jp.alpha + k as f64 / ev.omega()), tol);
        margin_ok(&q) && margin_ok(&d)
    })
}

fn mellin_sato_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = config.fixtures.mellin_sato.clone();
    let (tol, st) = (config.tol, config.suite_tol);
    let base = [f.alpha, f.beta, f.gamma_prime];
    let chis = f.chis.clone();
    let trials = draws(rng, &base, 0.3, config.trials, |q| mellin_sato_feasible(ev, q, &chis, tol));
    let mut jobs: Vec<Job> = Vec::new();
    let mut points = vec![(format!("fixture{}", fmt_params(&base)), base.to_vec())];
    points.extend(trials.iter().enumerate().map(|(k, q)| (format!("trial[{k}]{}", fmt_params(q)), q.clone())));
    for (label, p) in points {
        let chis = f.chis.clone();
        jobs.push(Box::new(move || {
            let jp = JordanPochhammerWeight::new(ev.clone(), c(p[0]), vec![c(p[1])], vec![c(p[2])]);
            let mut rows = Vec::new();
            for &chi in &chis {
                let r = jp.clone().and_then(|jp| mellin_sato_residual(&jp, &CocycleElement::one(Side::Dual), chi, tol));
                rows.push(CheckRow::from_residual(format!("{label}.chi={chi}"), r, st));
                let r = jp.clone().and_then(|jp| mellin_sato_residual_dual(&jp, chi, tol));
                rows.push(CheckRow::from_residual(format!("{label}.dual.chi={chi}"), r, st));
            }
            rows
        }));
    }
    let mut rows = run_jobs(jobs);
    rows.extend(exhausted_row("trials", trials.len(), config.trials, st));
    rows
}

// ---------------------------------------------------------------- limit

fn limit_error(ev: &AngleEvaluator, n: u32, eps: f64, b: f64, g: f64, x: f64, tol: f64) -> Result<Residual> {
    let want = phi_terminating(n, c(b), c(g), c(x), ev.modulus())?;
    let p = HGParams::real(ev, -(n as f64) + eps, b, g, x);
    let (v, quad) = psi_residue_corrected_detailed(n, &p, tol)?;
    Ok(Residual::new(v - want, want.norm()).with_quad(quad))
}

fn limit_rows(ev: &AngleEvaluator, label: &str, n: u32, bgx: [f64; 3], eps: [f64; 2], tol: f64, st: f64) -> Vec<CheckRow> {
    let [b, g, x] = bgx;
    let mut rows = vec![CheckRow::from_residual(format!("{label}.n={n}"), limit_error(ev, n, 0.0, b, g, x, tol), st)];
    let errs: Vec<Result<Residual>> = eps.iter().map(|&e| limit_error(ev, n, e, b, g, x, tol)).collect();
    for (e, r) in eps.iter().zip(&errs) {
        // Off the limit the difference is O(ε) with a constant that grows with n; the rate row checks the order.
        rows.push(CheckRow::from_residual(format!("{label}.n={n}.eps={e:e}"), r.clone(), 100.0 * e));
    }
    let rel: Vec<Result<f64>> = errs.into_iter().map(|r| r.map(|r| r.relative())).collect();
    rows.push(rate_row(&format!("{label}.n={n}.rate"), &rel, &eps));
    rows
}

fn limit_feasible(ev: &AngleEvaluator, n: u32, bgx: &[f64], tol: f64) -> bool {
    let p = HGParams::real(ev, -(n as f64), bgx[0], bgx[1], bgx[2]);
    let w = ev.w_big();
    let window = p.window();
    let hi = 0.0f64.min(w - bgx[1]);
    window.margin(bgx[2]) >= MIN_MARGIN && hi - (-bgx[0]) >= 2.0 * MIN_MARGIN && phi_terminating(n, p.beta, p.gamma, p.x, ev.modulus()).is_ok() && tol > 0.0
}

fn limit_suite(ev: &AngleEvaluator, config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = config.fixtures.limit.clone();
    let (tol, st) = (config.tol, config.suite_tol);
    let base = [f.beta, f.gamma, f.x];
    let mut jobs: Vec<Job> = Vec::new();
    for &n in &f.ns {
        let eps = f.eps;
        jobs.push(Box::new(move || limit_rows(ev, "fixture", n, base, eps, tol, st)));
    }
    let [a, b, x] = f.jacobi;
    let jn = f.jacobi_n;
    jobs.push(Box::new(move || {
        vec![CheckRow::from_residual(
            format!("jacobi.n={jn}{}", fmt_params(&[a, b, x])),
            jacobi_limit_residual(jn, c(a), c(b), c(x), ev, tol),
            st,
        )]
    }));
    let max_n = f.ns.iter().copied().max().unwrap_or(0);
    let trials = draws(rng, &base, 0.3, config.trials, |q| (0..=max_n).all(|n| limit_feasible(ev, n, q, tol)));
    for (k, q) in trials.iter().enumerate() {
        let ns = f.ns.clone();
        let bgx = [q[0], q[1], q[2]];
        jobs.push(Box::new(move || {
            ns.iter()
                .map(|&n| {
                    CheckRow::from_residual(format!("trial[{k}]{}.n={n}", fmt_params(&bgx)), limit_error(ev, n, 0.0, bgx[0], bgx[1], bgx[2], tol), st)
                })
                .collect()
        }));
    }
    let mut rows = run_jobs(jobs);
    rows.extend(exhausted_row("trials", trials.len(), config.trials, st));
    rows
}

// ---------------------------------------------------------------- ortho

const IDENTITY_TOL: f64 = 1e-12;

fn identity_rows(m: &ModulusParameters, label: &str, alpha: f64, beta: f64, max_degree: u32) -> Vec<CheckRow> {
    let mut worst: Option<(f64, Residual)> = None;
    for mi in 0..=max_degree {
        for ni in 0..=max_degree {
            match identity29_residual(mi, ni, c(alpha), c(beta), m) {
                Ok(r) => {
                    if worst.as_ref().is_none_or(|(w, _)| r.relative() > *w) {
                        worst = Some((r.relative(), r));
                    }
                }
                Err(e) => return vec![CheckRow::failed(format!("{label}.m={mi}.n={ni}"), &e, IDENTITY_TOL)],
            }
        }
    }
    let (_, r) = worst.expect("at least one degree pair");
    vec![CheckRow::from_residual(format!("{label}[m,n<={max_degree}]"), Ok(r), IDENTITY_TOL)]
}

fn ortho_suite(config: &RunConfig, rng: &mut ChaCha8Rng) -> Vec<CheckRow> {
    let f = config.fixtures.ortho.clone();
    let (tol, st) = (config.tol, config.suite_tol);
    let ev = match AngleEvaluator::from_omega(f.omega) {
        Ok(ev) => ev,
        Err(e) => return vec![CheckRow::failed("setup", &e, st)],
    };
    let m = *ev.modulus();
    let mut rows = Vec::new();
    match gram_matrix(f.max_degree, c(f.alpha), c(f.beta), &ev, tol) {
        Ok(g) => {
            let quad = QuadSummary::default();
            let cmax = g.iter().enumerate().map(|(i, row)| row[i].expected.norm()).fold(0.0, f64::max);
            for (i, row) in g.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    let scale = if i == j { e.expected.norm() } else { cmax };
                    for (route, v) in [("termwise", e.termwise), ("direct", e.direct)] {
                        rows.push(CheckRow::from_residual(
                            format!("gram[{i}][{j}].{route}"),
                            Ok(Residual::new(v - e.expected, scale).with_quad(quad)),
                            st,
                        ));
                    }
                    rows.push(CheckRow::from_residual(
                        format!("gram[{i}][{j}].algebraic_route"),
                        Ok(Residual::new(e.termwise - e.algebraic, scale)),
                        st,
                    ));
                }
            }
        }
        Err(e) => rows.push(CheckRow::failed("gram", &e, st)),
    }
    rows.extend(identity_rows(&m, &format!("identity{}", fmt_params(&[f.alpha, f.beta])), f.alpha, f.beta, f.identity_max_degree));
    for k in 0..config.trials {
        let a = rng.gen_range(0.1..3.0);
        let b = rng.gen_range(0.1..3.0);
        rows.extend(identity_rows(&m, &format!("identity.trial[{k}]{}", fmt_params(&[a, b])), a, b, f.identity_max_degree));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope", &RunConfig::default()).is_err());
    }

    #[test]
    fn fixtures_round_trip() {
        let f = Fixtures::default();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(Fixtures::from_json(&text).unwrap(), f);
        let partial = Fixtures::from_json(r#"{"qbeta": {"alpha": 0.3}}"#).unwrap();
        assert_eq!(partial.qbeta.alpha, 0.3);
        assert_eq!(partial.qbeta.beta, 0.9);
        assert!(Fixtures::from_json(r#"{"qbeta": {"gamma": 1}}"#).is_err());
    }

    #[test]
    fn salts_differ() {
        assert_ne!(suite_salt("heine"), suite_salt("diffeq"));
    }
}
