//! `qone`: point evaluation, verification suites and parameter sweeps.
//!
//! Exit codes: 0 on success or a passing report, 1 on a failing report,
//! 2 on usage errors and infeasible parameters.

mod eval;
mod sweep;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qone_core::qcore::parse_complex;
use qone_core::verify::{run_suite, Fixtures, RunConfig, VerificationReport};

use eval::{evaluate, Check, Function, Params, Usage};
use sweep::{Axis, SweepSpec};

const DEFAULT_OMEGA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Parser)]
#[command(name = "qone", version, about = "Double sine integrals and q-hypergeometric identities at |q| = 1")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one function at one parameter point.
    Eval(EvalArgs),
    /// Run a verification suite and print its report.
    Verify(VerifyArgs),
    /// Evaluate a function over a grid of parameters.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PointArgs {
    /// Degree.
    #[arg(long)]
    n: Option<u32>,
    /// Second degree; with `jacobi`, evaluates the pairing of p_m and p_n.
    #[arg(long)]
    m: Option<u32>,
    /// Denominator offsets γ_j for `det`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gammas: Vec<f64>,
    /// Numerator offsets γ′_j for `det`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gamma_primes: Vec<f64>,
    /// Use the closed form for `qbeta` and `det` instead of quadrature.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    function: Function,
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    omega: f64,
    /// Complex values are written "re,im".
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// doublesine, qbeta, det, cocycle, heine, connection, diffeq, mellin-sato, limit, ortho or all.
    suite: String,
    /// Overrides the ω of the fixtures file.
    #[arg(long)]
    omega: Option<f64>,
    /// Relative threshold for identity residuals.
    #[arg(long, default_value_t = 1e-8)]
    suite_tol: f64,
    /// Seeded random draws per fixture.
    #[arg(long, default_value_t = 5)]
    trials: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// JSON file overriding the compiled-in fixtures.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    function: Function,
    /// Each of these takes a value, "re,im" or a range "start:stop:step".
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Adds a residual column.
    #[arg(long, value_enum)]
    check: Option<Check>,
    /// Largest grid accepted.
    #[arg(long, default_value_t = 10_000)]
    max_points: usize,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Verify(a) => run_verify(a),
        Command::Sweep(a) => run_sweep(a),
    };
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let kind = if e.is::<Usage>() { "usage" } else { "error" };
            eprintln!("qone: {kind}: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn setup_threads(threads: Option<usize>) -> Result<()> {
    if let Some(k) = threads {
        if k == 0 {
            anyhow::bail!(Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn complex_flag(v: &Option<String>, flag: &str) -> Result<Option<Complex64>> {
    v.as_deref()
        .map(|s| parse_complex(s).map_err(|e| Usage(format!("--{flag}: {e}")).into()))
        .transpose()
}

fn point_params(omega: f64, p: &PointArgs) -> Params {
    Params {
        omega,
        n: p.n,
        m: p.m,
        gammas: p.gammas.clone(),
        gamma_primes: p.gamma_primes.clone(),
        exact: p.exact,
        ..Params::default()
    }
}

fn run_eval(a: EvalArgs) -> Result<u8> {
    setup_threads(a.common.threads)?;
    let params = Params {
        alpha: complex_flag(&a.alpha, "alpha")?,
        beta: complex_flag(&a.beta, "beta")?,
        gamma: complex_flag(&a.gamma, "gamma")?,
        x: complex_flag(&a.x, "x")?,
        ..point_params(a.omega, &a.point)
    };
    let v = evaluate(a.function, &params, a.common.tol)?;
    let text = match a.common.format {
        Format::Csv => format!("{:?},{:?},{:?}\n", v.value.re, v.value.im, v.abs_err),
        Format::Json => format!("{}\n", serde_json::json!({"re": v.value.re, "im": v.value.im, "abs_err": v.abs_err})),
    };
    emit(&a.common.out, &text)?;
    Ok(0)
}

fn report_csv(report: &VerificationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "check", "residual", "scale", "relative", "threshold", "pass", "status", "integrals", "panels", "evaluations", "detail",
    ])?;
    for r in &report.checks {
        let status = serde_json::to_value(r.status)?;
        w.write_record([
            r.check.clone(),
            format!("{:e}", r.residual),
            format!("{:e}", r.scale),
            format!("{:e}", r.relative),
            format!("{:e}", r.threshold),
            r.pass.to_string(),
            status.as_str().unwrap_or_default().to_string(),
            r.quadrature.integrals.to_string(),
            r.quadrature.panels.to_string(),
            r.quadrature.evaluations.to_string(),
            r.detail.clone().unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn run_verify(a: VerifyArgs) -> Result<u8> {
    setup_threads(a.common.threads)?;
    let mut fixtures = match &a.fixtures {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Fixtures::from_json(&text).map_err(|e| Usage(e.to_string()))?
        }
        None => Fixtures::default(),
    };
    let mut config = RunConfig {
        tol: a.common.tol,
        suite_tol: a.suite_tol,
        trials: a.trials,
        seed: a.seed,
        ..RunConfig::default()
    };
    if let Some(omega) = a.omega {
        config.omega = omega;
        fixtures.omega = None;
    }
    config.fixtures = fixtures;
    let report = run_suite(&a.suite, &config).map_err(|e| Usage(e.to_string()))?;
    let text = match a.common.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report_csv(&report)?,
    };
    emit(&a.common.out, &text)?;
    let failed = report.checks.iter().filter(|r| !r.pass).count();
    eprintln!("{}: {} checks, {} failed", report.suite, report.checks.len(), failed);
    Ok(if report.pass { 0 } else { 1 })
}

fn run_sweep(a: SweepArgs) -> Result<u8> {
    setup_threads(a.common.threads)?;
    let parse = |v: &Option<String>| v.as_deref().map(Axis::parse).transpose();
    let mut axes = [parse(&a.omega)?, parse(&a.alpha)?, parse(&a.beta)?, parse(&a.gamma)?, parse(&a.x)?];
    if axes[0].is_none() {
        axes[0] = Some(Axis::Fixed(Complex64::new(DEFAULT_OMEGA, 0.0)));
    }
    let complex: Vec<bool> = axes.iter().flatten().map(|ax| matches!(ax, Axis::Fixed(z) if z.im != 0.0)).collect();
    let spec = SweepSpec {
        function: a.function,
        base: point_params(DEFAULT_OMEGA, &a.point),
        axes,
        check: a.check,
        tol: a.common.tol,
        max_points: a.max_points,
    };
    let rows = spec.run()?;
    let text = match a.common.format {
        Format::Json => {
            let arr: Vec<serde_json::Value> = rows.iter().map(sweep::json_row).collect();
            serde_json::to_string_pretty(&arr)? + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(sweep::csv_header(&rows, &complex, a.check.is_some()))?;
            for r in &rows {
                w.write_record(sweep::csv_record(r, &complex, a.check.is_some()))?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    emit(&a.common.out, &text)?;
    Ok(0)
}
