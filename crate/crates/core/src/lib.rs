//! Unbiased variance-elimination policy-gradient estimators and a scalar
//! controlled-diffusion LQG testbed for comparing them against baseline
//! methods.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod methods;
pub mod quadrature;
pub mod selftest;
pub mod trajectory;
pub mod ve;

pub use error::{Error, Result};
