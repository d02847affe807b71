//! Partial moments of centred normal laws.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;
use std::f64::consts::{PI, SQRT_2};

pub(crate) fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub(crate) fn pdf(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// E[Z^k 1{lo < Z <= hi}] for Z ~ N(0, sd²), k ∈ {0, 1, 2}.
pub(crate) fn interval_moment(sd: f64, k: u8, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let (l, h) = (lo / sd, hi / sd);
    let mass = if l >= 0.0 {
        // upper tail: difference of survival functions is more accurate
        cdf(-l) - cdf(-h)
    } else {
        cdf(h) - cdf(l)
    };
    let (pl, ph) = (pdf(l), pdf(h));
    match k {
        0 => mass,
        1 => sd * (pl - ph),
        2 => {
            let lpl = if l.is_infinite() { 0.0 } else { l * pl };
            let hph = if h.is_infinite() { 0.0 } else { h * ph };
            sd * sd * (mass + lpl - hph)
        }
        _ => unreachable!("moment order {k}"),
    }
}

/// E[(Z⁻)^β] for Z ~ N(0, sd²).
pub(crate) fn neg_abs_moment(sd: f64, beta: f64) -> f64 {
    // E|Z|^β = sd^β 2^{β/2} Γ((β+1)/2) / √π, half of it on the negative side
    0.5 * sd.powf(beta) * 2f64.powf(beta / 2.0) * gamma((beta + 1.0) / 2.0) / PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn full_line_moments() {
        let inf = f64::INFINITY;
        assert_relative_eq!(interval_moment(2.0, 0, -inf, inf), 1.0, max_relative = 1e-15);
        assert!(interval_moment(2.0, 1, -inf, inf).abs() < 1e-15);
        assert_relative_eq!(interval_moment(2.0, 2, -inf, inf), 4.0, max_relative = 1e-15);
        assert_relative_eq!(interval_moment(1.0, 2, -inf, 0.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn matches_midpoint_quadrature() {
        let (sd, lo, hi) = (1.3, -0.7, 2.1);
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        for k in 0..3u8 {
            let mut acc = 0.0;
            for i in 0..steps {
                let z = lo + (i as f64 + 0.5) * h;
                acc += z.powi(k as i32) * pdf(z / sd) / sd * h;
            }
            assert_relative_eq!(interval_moment(sd, k, lo, hi), acc, max_relative = 1e-8);
        }
    }

    #[test]
    fn neg_abs_moment_at_two_is_half_variance() {
        assert_relative_eq!(neg_abs_moment(3.0, 2.0), 4.5, max_relative = 1e-12);
        assert_relative_eq!(neg_abs_moment(1.0, 1.0), 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-12);
    }
}
