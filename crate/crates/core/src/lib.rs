//! Exact finite-precision harmonic analysis over `Q_p` and its unramified
//! quadratic extension.
//!
//! Everything is computed by finite summation over residue rings. Scalars live
//! in cyclotomic fields, and anything depending on `s` is a rational function
//! in `X = q^{-s}`.

pub mod error;
pub mod ring;
pub mod scalar;
pub mod character;
pub mod schwartz;
pub mod integrate;
pub mod weil;
pub mod charsums;
pub mod zeta;
pub mod cli;

pub use error::{Error, Result};
