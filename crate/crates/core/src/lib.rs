//! Simulation and numerical verification for slightly supercritical
//! branching processes in iid random environments.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: special functions, quadrature, the inverse-gamma law,
//!   Kolmogorov-Smirnov statistics, summaries and counter-based random streams.
//! * [`pgf`]: offspring laws, their generating functions and shape functions.
//! * [`envmodel`]: random environments with prescribed mean excess and variance.
//! * [`survival`]: environment paths, survival-probability estimators and
//!   Haldane-type prediction sweeps.
//! * [`perpetuity`]: random series `Y = sum C_k A_{k+1}`, the annuity equation
//!   and the Dirac / inverse-gamma limit laws.
//! * [`verify`]: the invariant and acceptance suites used by the CLI.

// NaN has to fail parameter checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envmodel;
pub mod error;
pub mod numerics;
pub mod perpetuity;
pub mod pgf;
pub mod survival;
pub mod verify;

pub use error::{Error, Result};
