//! Exact quench dynamics for long-range transverse-field Ising chains and the
//! analysis tools for dynamical quantum phase transitions built on top of it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dqpt;
pub mod engine;
pub mod entanglement;
pub mod error;
pub mod model;
pub mod observables;
pub mod perturbation;
pub mod sampler;
pub mod spectral;

pub use error::{Error, Result};
