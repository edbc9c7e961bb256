//! Coupled-mode simulator for a zero-temperature Bose-Einstein condensate
//! tunnelling around a ring of potential wells.
//!
//! The canonical dynamics evolve one complex amplitude per well. Times are
//! measured in units of `1/omega_R` with `omega_R = 2 * k_tilde` and hbar = 1.

// `!(x >= 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod drives;
pub mod error;
pub mod integrator;
pub mod model;
pub mod output;
pub mod scenarios;
pub mod validate;

pub use error::{Error, Result};
