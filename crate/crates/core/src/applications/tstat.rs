use serde::{Deserialize, Serialize};

use crate::bounds::{evaluate_bound, BoundKind, BoundSpec, RateInputs};
use crate::error::{domain, Error, Result};
use crate::montecarlo::{domination_check, estimate_with, DominationVerdict, MIN_REPLICATES, TIE_TOL};
use crate::processes::{path_key, sample_xs, DifferenceModel};

/// √n·mean / s with s² the unbiased sample variance.
pub fn t_statistic(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(domain(format!("t-statistic needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let ss: f64 = sample.iter().map(|v| (v - mean) * (v - mean)).sum();
    if !(ss > 0.0) {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    Ok(nf.sqrt() * mean / (ss / (nf - 1.0)).sqrt())
}

/// x·√(n/(n+x²−1)), the self-normalized level equivalent to {T_n ≥ x}.
pub fn transformed_level(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    x * (nf / (nf + x * x - 1.0)).sqrt()
}

/// Indicators of {T_n ≥ x} and {S_n/√[S]_n ≥ x√(n/(n+x²−1))}. They agree
/// for 0 < x < √n.
pub fn t_event_equivalence(sample: &[f64], x: f64) -> Result<(bool, bool)> {
    let n = sample.len();
    if !(x > 0.0 && x < (n as f64).sqrt()) {
        return Err(domain(format!("x must lie in (0, sqrt(n)) = (0, {}), got {x}", (n as f64).sqrt())));
    }
    let sq: f64 = sample.iter().map(|v| v * v).sum();
    if !(sq > 0.0) {
        return Err(Error::Degenerate("[S]_n is zero".into()));
    }
    let t = t_statistic(sample)?;
    let s: f64 = sample.iter().sum();
    Ok((t >= x, s / sq.sqrt() >= transformed_level(x, n)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TstatVerdict {
    pub x: f64,
    pub b: f64,
    pub m: f64,
    pub verdict: DominationVerdict,
}

/// Estimate P(T_n ≥ x, b ≤ √[S]_n ≤ bM) by computing T_n directly on each
/// path and compare with the t-statistic peeling bound. A path with zero
/// sample variance has T_n = ±∞ by the sign of its mean (the limit of the
/// self-normalized identity).
#[allow(clippy::too_many_arguments)]
pub fn verify_tstat(
    model: &DifferenceModel,
    n: usize,
    xs_grid: &[f64],
    b: f64,
    m_grid: &[f64],
    n_rep: u64,
    gamma: f64,
    seed: u64,
) -> Result<Vec<TstatVerdict>> {
    if n < 2 || n_rep < MIN_REPLICATES {
        return Err(domain(format!("need n >= 2 and n_rep >= {MIN_REPLICATES}")));
    }
    let mut cells = Vec::new();
    let mut bounds = Vec::new();
    for &x in xs_grid {
        for &m in m_grid {
            let params = RateInputs {
                x: Some(x),
                n: Some(n as u64),
                m: Some(m),
                ..Default::default()
            };
            bounds.push(evaluate_bound(&BoundSpec::new(BoundKind::Thm31Tstat, params)?)?);
            cells.push((x, m));
        }
    }
    let ests = estimate_with(n_rep, cells.len(), gamma, |r, acc| {
        let xs = sample_xs(model, n, path_key(seed, r));
        let t = match t_statistic(&xs) {
            Ok(t) => t,
            Err(_) => {
                let s: f64 = xs.iter().sum();
                if s > 0.0 { f64::INFINITY } else if s < 0.0 { f64::NEG_INFINITY } else { 0.0 }
            }
        };
        let root = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (i, &(x, m)) in cells.iter().enumerate() {
            if t >= x - TIE_TOL * x.max(1.0) && root >= b * (1.0 - TIE_TOL) && root <= b * m * (1.0 + TIE_TOL) {
                acc[i] += 1;
            }
        }
    });
    Ok(cells
        .into_iter()
        .zip(bounds)
        .zip(ests)
        .map(|(((x, m), bound), est)| TstatVerdict {
            x,
            b,
            m,
            verdict: domination_check(&est, bound),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::VerdictStatus;
    use crate::processes::Family;
    use crate::rng::StreamKey;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn t_examples() {
        assert_eq!(t_statistic(&[1.0, 1.0, 1.0, -3.0]).unwrap(), 0.0);
        assert_eq!(t_statistic(&[1.0, -1.0]).unwrap(), 0.0);
        let t = t_statistic(&[2.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((t - 2.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((t - 2.4495).abs() < 1e-4);
        assert!(matches!(t_statistic(&[1.0, 1.0, 1.0]), Err(Error::Degenerate(_))));
        assert!(t_statistic(&[1.0]).is_err());
    }

    #[test]
    fn equivalence_examples() {
        assert_eq!(t_event_equivalence(&[1.0, -1.0], 0.5).unwrap(), (false, false));
        assert!(t_event_equivalence(&[1.0, 1.0, 1.0], 1.0).is_err());
        assert!(t_event_equivalence(&[1.0, -1.0], 2f64.sqrt()).is_err());
    }

    #[test]
    fn equivalence_on_gaussian_samples() {
        let root = StreamKey::new(77);
        for r in 0..5000u64 {
            let mut rng = root.child(r).rng();
            let xs: Vec<f64> = (0..20).map(|_| StandardNormal.sample(&mut rng)).collect();
            for x in [0.5, 1.0, 2.0] {
                let (l, rr) = t_event_equivalence(&xs, x).unwrap();
                assert_eq!(l, rr, "replicate {r}, x={x}");
            }
        }
    }

    #[test]
    fn rademacher_tstat_passes() {
        let m = DifferenceModel::new(Family::Rademacher).unwrap();
        let v = verify_tstat(&m, 20, &[1.0, 2.0, 3.0], 2.0, &[1.0, 4.0], 5000, 0.99, 3).unwrap();
        assert_eq!(v.len(), 6);
        assert!(v.iter().all(|c| c.verdict.status != VerdictStatus::ViolationEvidence));
    }
}
