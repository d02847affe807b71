//! Rate functions and optimal exponents.

use crate::error::{domain, Result};

const SERIES_CUTOFF: f64 = 1e-4;

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(domain(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// ψ(x) = (2/x²)∫₀ˣ ln(1+u) du = 2((1+x)ln(1+x) − x)/x², with ψ(0) = 1.
///
/// Below `x = 1e-4` the three-term Taylor expansion `1 − x/3 + x²/6` is used.
pub fn psi(x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    if x < SERIES_CUTOFF {
        return Ok(1.0 - x / 3.0 + x * x / 6.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(2.0 * ((1.0 + x) * x.ln_1p() - x) / (x * x))
}

/// f(x, y) = [xy(ln(xy+1) − 1) + ln(xy+1)] / y², with f(x, 0) = x²/2.
pub fn f_rate(x: f64, y: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    check_nonneg("y", y)?;
    let u = x * y;
    if u < SERIES_CUTOFF {
        return Ok(0.5 * x * x * (1.0 - u / 3.0 + u * u / 6.0));
    }
    let l = u.ln_1p();
    Ok((u * (l - 1.0) + l) / (y * y))
}

/// Lower bound x²/(2(1 + xy/3)) on `f_rate`.
pub fn bernstein_rate(x: f64, y: f64) -> f64 {
    x * x / (2.0 * (1.0 + x * y / 3.0))
}

/// Coefficient (e^{λy} − 1 − λy)/y² of the variance term in the exponential
/// supermartingale; λ²/2 at y = 0.
pub fn exp_compensator(lambda: f64, y: f64) -> f64 {
    let u = lambda * y;
    if u.abs() < SERIES_CUTOFF {
        // e^u − 1 − u = u²/2 + u³/6 + u⁴/24 + ...
        return lambda * lambda * (0.5 + u / 6.0 + u * u / 24.0);
    }
    (u.exp_m1() - u) / (y * y)
}

/// λ* = ln(xy + 1)/y, the minimiser of λ ↦ (e^{λy} − 1 − λy)/y² − λx.
/// Equals x at y = 0.
pub fn optimal_lambda(x: f64, y: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(domain(format!("x must be > 0, got {x}")));
    }
    check_nonneg("y", y)?;
    if x * y < SERIES_CUTOFF {
        let u = x * y;
        // ln(1+u)/y = x(1 − u/2 + u²/3 − ...)
        return Ok(x * (1.0 - u / 2.0 + u * u / 3.0));
    }
    Ok((x * y).ln_1p() / y)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(domain(format!("beta must lie in (1, 2), got {beta}")));
    }
    Ok(())
}

/// λ* = (x/β)^{1/(β−1)}, the maximiser of λ ↦ λx − λ^β.
pub fn optimal_lambda_beta(x: f64, beta: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(domain(format!("x must be > 0, got {x}")));
    }
    check_beta(beta)?;
    Ok((x / beta).powf(1.0 / (beta - 1.0)))
}

/// (β − 1)(x/β)^{β/(β−1)}: the value of max_λ (λx − λ^β), i.e. the decay
/// coefficient multiplying G_n(β) in the β-moment expectation bound.
pub fn beta_rate(x: f64, beta: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    check_beta(beta)?;
    Ok((beta - 1.0) * (x / beta).powf(beta / (beta - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0).unwrap(), 1.0);
        assert_relative_eq!(psi(1.0).unwrap(), 4.0 * 2f64.ln() - 2.0, max_relative = 1e-14);
        assert_relative_eq!(
            psi(3.0).unwrap(),
            (2.0 / 9.0) * (8.0 * 2f64.ln() - 3.0),
            max_relative = 1e-14
        );
        assert_relative_eq!(psi(1.0).unwrap(), 0.7725887, epsilon = 1e-7);
        assert_relative_eq!(psi(3.0).unwrap(), 0.5655950, epsilon = 1e-7);
        assert!(psi(-0.1).is_err());
        assert!(psi(f64::NAN).is_err());
    }

    #[test]
    fn psi_continuous_at_series_switch() {
        let below = psi(SERIES_CUTOFF * (1.0 - 1e-9)).unwrap();
        let above = psi(SERIES_CUTOFF * (1.0 + 1e-9)).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-11);
        assert!((psi(1e-8).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn f_rate_values() {
        assert_eq!(f_rate(3.0, 0.0).unwrap(), 4.5);
        assert_relative_eq!(f_rate(1.0, 1.0).unwrap(), 2.0 * 2f64.ln() - 1.0, max_relative = 1e-14);
        assert_relative_eq!(f_rate(1.0, 1.0).unwrap(), 0.3862944, epsilon = 1e-7);
        // 2² ψ(0.002)/2 with ψ(0.002) = 1 − 0.002/3 + 0.002²/6 − ...
        assert_relative_eq!(f_rate(2.0, 0.001).unwrap(), 1.99867, epsilon = 1e-5);
        for x in [0.5, 3.0, 10.0] {
            assert!((f_rate(x, 1e-8).unwrap() - x * x / 2.0).abs() < 1e-6 * x * x);
        }
        assert!(f_rate(-1.0, 1.0).is_err());
        assert!(f_rate(1.0, -1.0).is_err());
    }

    #[test]
    fn optimal_lambda_values() {
        assert_relative_eq!(optimal_lambda(1.0, 1.0).unwrap(), 2f64.ln(), max_relative = 1e-15);
        assert_eq!(optimal_lambda(2.5, 0.0).unwrap(), 2.5);
        assert_relative_eq!(optimal_lambda(2.0, 0.5).unwrap(), 2.0 * 2f64.ln(), max_relative = 1e-15);
        assert!(optimal_lambda(0.0, 1.0).is_err());
    }

    #[test]
    fn optimal_lambda_beta_values() {
        assert_relative_eq!(optimal_lambda_beta(1.5, 1.5).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(optimal_lambda_beta(3.0, 1.5).unwrap(), 4.0, max_relative = 1e-14);
        assert_relative_eq!(optimal_lambda_beta(1.0, 1.5).unwrap(), 4.0 / 9.0, max_relative = 1e-14);
        assert!(optimal_lambda_beta(1.0, 2.0).is_err());
        assert!(optimal_lambda_beta(1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_beta_attains_closed_form_value() {
        for &(x, beta) in &[(0.3, 1.2), (1.0, 1.5), (4.0, 1.9)] {
            let l = optimal_lambda_beta(x, beta).unwrap();
            let v = l * x - l.powf(beta);
            assert_relative_eq!(v, beta_rate(x, beta).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn compensator_matches_direct_formula() {
        for &(l, y) in &[(0.5f64, 1.0f64), (2.0, 0.3), (1e-3, 1.0), (1.0, 0.0)] {
            let direct = if y == 0.0 {
                l * l / 2.0
            } else {
                ((l * y).exp() - 1.0 - l * y) / (y * y)
            };
            assert_relative_eq!(exp_compensator(l, y), direct, max_relative = 1e-6);
        }
    }
}
