//! Error type shared by every module.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the double sine angle at {point} (lattice index m={m}, n={n})")]
    Pole { point: Complex64, m: i64, n: i64 },

    #[error("q-Pochhammer symbol has a vanishing factor at j={j}")]
    PochhammerPole { j: i64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no separating line: left lattice reaches Re z = {left_max}, right lattice starts at Re z = {right_min}")]
    NoSeparatingLine { left_max: f64, right_min: f64 },

    #[error("exponent {value} outside convergence window ({lower}, {upper})")]
    OutsideWindow { lower: f64, upper: f64, value: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("higher-order pole: {0}")]
    HigherOrderPole(String),

    #[error("element is not in the cocycle space: {0}")]
    NotInSpace(String),

    #[error("{check} is infeasible: {source}")]
    Infeasible {
        check: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps a window or separation failure with the name of the relation and shift that hit it.
    pub fn infeasible(check: impl Into<String>, source: Error) -> Error {
        Error::Infeasible { check: check.into(), source: Box::new(source) }
    }

    /// True for failures that mean "this parameter point cannot be evaluated by contour quadrature".
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::NoSeparatingLine { .. } | Error::OutsideWindow { .. } | Error::Divergent(_) => true,
            Error::Infeasible { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
