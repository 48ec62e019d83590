//! Coherent-feedback control of open quantum systems.
//!
//! Open systems are described by SLH triples and composed with the series
//! product ([`slh`]); the resulting master equation is integrated or solved
//! for its stationary state ([`lindblad`]); pure steady states are certified
//! and designed in [`stability`]; linear bosonic systems have an exact
//! moment description in [`gaussian`]. [`models`] collects the standard
//! qubit, qutrit, spin-squeezing and Fock-state setups, and [`scenario`]
//! runs them end to end with reference checks.

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod lindblad;
pub mod models;
pub mod montecarlo;
pub mod operator;
pub mod scenario;
pub mod slh;
pub mod stability;

pub use error::{Error, Result};
pub use lindblad::{DensityMatrix, LindbladSystem};
pub use operator::Operator;
pub use slh::SlhTriple;
