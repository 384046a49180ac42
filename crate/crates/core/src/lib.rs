//! q-hypergeometric integrals with |q| = 1 via the double sine function.

pub mod cocycle;
pub mod contour;
pub mod doublesine;
pub mod error;
pub mod jacobi;
pub mod pairing;
pub mod qcore;
pub mod qhyper;
pub mod verify;

pub use error::{Error, Result};
