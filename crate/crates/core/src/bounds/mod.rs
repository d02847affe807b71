//! Deterministic evaluation of rate functions and closed-form bounds.

mod catalog;
mod rate;

pub use catalog::{clamp_probability, evaluate_bound, BoundKind, BoundSpec, RateInputs};
pub use rate::{
    bernstein_rate, beta_rate, exp_compensator, f_rate, optimal_lambda, optimal_lambda_beta, psi,
};
