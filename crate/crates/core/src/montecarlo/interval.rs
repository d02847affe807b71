//! Clopper–Pearson binomial confidence limits.
//!
//! The limits are quantiles of Beta laws: lower = Beta(k, n−k+1) at (1−γ)/2,
//! upper = Beta(k+1, n−k) at (1+γ)/2. They are found by bisection on the
//! regularized incomplete beta function.

use statrs::function::beta::beta_reg;

fn beta_quantile(a: f64, b: f64, prob: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Clopper–Pearson interval for `hits` successes in `trials`
/// at confidence level `gamma`.
pub fn clopper_pearson(hits: u64, trials: u64, gamma: f64) -> (f64, f64) {
    assert!(trials > 0 && hits <= trials, "hits {hits} of {trials}");
    assert!(gamma > 0.0 && gamma < 1.0, "confidence level {gamma}");
    let alpha = 1.0 - gamma;
    let (k, n) = (hits as f64, trials as f64);
    let lo = if hits == 0 {
        0.0
    } else {
        beta_quantile(k, n - k + 1.0, alpha / 2.0)
    };
    let hi = if hits == trials {
        1.0
    } else {
        beta_quantile(k + 1.0, n - k, 1.0 - alpha / 2.0)
    };
    (lo, hi)
}
