//! Exponential inequalities for self-normalized martingales: closed-form
//! bound calculators, simulation of the martingale classes they assume, and
//! Monte Carlo / exact-enumeration verification of the inequalities.

// `!(v > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod bounds;
pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod processes;
pub mod rng;

pub use error::{Error, Result};
