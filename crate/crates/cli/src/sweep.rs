//! Grid sweeps over ω, α, β, γ and x.

use anyhow::{bail, Result};
use num_complex::Complex64;
use qone_core::qcore::parse_complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::eval::{check_residual, evaluate, Check, Function, Params, Usage};

/// A flag value: one number, or "start:stop:step".
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Fixed(Complex64),
    Range(Vec<f64>),
}

impl Axis {
    pub fn parse(s: &str) -> Result<Axis> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [_] => Ok(Axis::Fixed(parse_complex(s).map_err(|e| Usage(e.to_string()))?)),
            [a, b, step] => {
                let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Usage(format!("bad range {s:?}")));
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if step.is_nan() || step <= 0.0 || b < a || !a.is_finite() || !b.is_finite() {
                    bail!(Usage(format!("range {s:?} needs start <= stop and a positive step")));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize + 1;
                // Round away the drift of repeated addition.
                let values = (0..count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect();
                Ok(Axis::Range(values))
            }
            _ => bail!(Usage(format!("cannot parse {s:?}; expected a number, re,im or start:stop:step"))),
        }
    }

    fn len(&self) -> usize {
        match self {
            Axis::Fixed(_) => 1,
            Axis::Range(v) => v.len(),
        }
    }

    fn get(&self, i: usize) -> Complex64 {
        match self {
            Axis::Fixed(z) => *z,
            Axis::Range(v) => Complex64::new(v[i], 0.0),
        }
    }
}

pub struct SweepSpec {
    pub function: Function,
    pub base: Params,
    /// Axes in the order omega, alpha, beta, gamma, x; None for flags not given.
    pub axes: [Option<Axis>; 5],
    pub check: Option<Check>,
    pub tol: f64,
    pub max_points: usize,
}

pub const AXIS_NAMES: [&str; 5] = ["omega", "alpha", "beta", "gamma", "x"];

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    #[serde(skip)]
    pub params: Vec<(&'static str, Complex64)>,
    pub re: Option<f64>,
    pub im: Option<f64>,
    pub abs_err: Option<f64>,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl SweepSpec {
    pub fn points(&self) -> usize {
        self.axes.iter().flatten().map(Axis::len).product()
    }

    /// Evaluates every grid point; the last axis varies fastest.
    pub fn run(&self) -> Result<Vec<Row>> {
        let total = self.points();
        if total > self.max_points {
            bail!(Usage(format!("sweep has {total} points, more than the cap of {}; raise --max-points", self.max_points)));
        }
        if let Some(Axis::Fixed(z)) = &self.axes[0] {
            if z.im != 0.0 {
                bail!(Usage("omega must be real".into()));
            }
        }
        let present: Vec<(usize, &Axis)> = self.axes.iter().enumerate().filter_map(|(i, a)| a.as_ref().map(|a| (i, a))).collect();
        Ok((0..total).into_par_iter().map(|k| self.row(k, &present)).collect())
    }

    fn row(&self, mut k: usize, present: &[(usize, &Axis)]) -> Row {
        let mut p = self.base.clone();
        let mut params = Vec::with_capacity(present.len());
        let mut picked = vec![Complex64::new(0.0, 0.0); present.len()];
        for (slot, (_, axis)) in present.iter().enumerate().rev() {
            picked[slot] = axis.get(k % axis.len());
            k /= axis.len();
        }
        for ((i, _), v) in present.iter().zip(picked) {
            match i {
                0 => p.omega = v.re,
                1 => p.alpha = Some(v),
                2 => p.beta = Some(v),
                3 => p.gamma = Some(v),
                _ => p.x = Some(v),
            }
            params.push((AXIS_NAMES[*i], v));
        }
        let (value, mut diagnostic) = match evaluate(self.function, &p, self.tol) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(format!("{e:#}"))),
        };
        let mut residual = None;
        if let (Some(c), Some(_)) = (self.check, &value) {
            match check_residual(c, &p, self.tol) {
                Ok(r) => residual = Some(r),
                Err(e) => diagnostic = Some(format!("residual: {e:#}")),
            }
        }
        Row {
            params,
            re: value.map(|v| v.value.re),
            im: value.map(|v| v.value.im),
            abs_err: value.map(|v| v.abs_err),
            feasible: value.is_some(),
            residual,
            diagnostic,
        }
    }
}

/// Header for the CSV form; complex parameters get paired columns.
pub fn csv_header(rows: &[Row], complex: &[bool], check: bool) -> Vec<String> {
    let mut h = Vec::new();
    if let Some(r) = rows.first() {
        for ((name, _), c) in r.params.iter().zip(complex) {
            if *c {
                h.push(format!("{name}_re"));
                h.push(format!("{name}_im"));
            } else {
                h.push(name.to_string());
            }
        }
    }
    h.extend(["re", "im", "abs_err", "feasible"].map(String::from));
    if check {
        h.push("residual".into());
    }
    h.push("diagnostic".into());
    h
}

pub fn csv_record(r: &Row, complex: &[bool], check: bool) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    let mut rec = Vec::new();
    for ((_, v), c) in r.params.iter().zip(complex) {
        rec.push(format!("{:?}", v.re));
        if *c {
            rec.push(format!("{:?}", v.im));
        }
    }
    rec.extend([opt(r.re), opt(r.im), opt(r.abs_err), r.feasible.to_string()]);
    if check {
        rec.push(opt(r.residual));
    }
    rec.push(r.diagnostic.clone().unwrap_or_default());
    rec
}

/// JSON form: parameters as numbers or {re, im}, then the row fields.
pub fn json_row(r: &Row) -> serde_json::Value {
    let mut obj = serde_json::Map::new();
    for (name, v) in &r.params {
        let val = if v.im == 0.0 { serde_json::json!(v.re) } else { serde_json::json!({"re": v.re, "im": v.im}) };
        obj.insert(name.to_string(), val);
    }
    if let serde_json::Value::Object(rest) = serde_json::to_value(r).expect("row serializes") {
        obj.extend(rest);
    }
    serde_json::Value::Object(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(Axis::parse("0.1:0.5:0.1").unwrap(), Axis::Range(vec![0.1, 0.2, 0.3, 0.4, 0.5]));
        assert_eq!(Axis::parse("1,2").unwrap(), Axis::Fixed(Complex64::new(1.0, 2.0)));
        assert!(Axis::parse("1:0:0.1").is_err());
        assert!(Axis::parse("0:1:0").is_err());
    }
}
