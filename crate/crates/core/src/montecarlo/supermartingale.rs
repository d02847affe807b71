use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::oracle::rademacher_expectation;
use super::verdict::VerdictStatus;
use crate::bounds::exp_compensator;
use crate::error::{domain, Result};
use crate::exec;
use crate::processes::{path_key, sample_xs, DifferenceModel, PathStats, PredictableTerms, StatsRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Supermartingale {
    /// U_n(λ) = exp{λS_n − ((e^{λy}−1−λy)/y²)·B_n(y)}
    U,
    /// V_n(λ) = exp{λS_n − λ^β·G_n(β)}
    V,
}

impl Supermartingale {
    /// `param` is y for U and β for V.
    fn request(self, param: f64) -> StatsRequest {
        match self {
            Supermartingale::U => StatsRequest { y: param, a: 0.0, beta: None },
            Supermartingale::V => StatsRequest { y: 0.0, a: 0.0, beta: Some(param) },
        }
    }

    fn coefficient(self, lambda: f64, param: f64) -> Result<f64> {
        match self {
            Supermartingale::U => Ok(exp_compensator(lambda, param)),
            Supermartingale::V => Ok(lambda.powf(param)),
        }
    }

    fn log_value(self, coef: f64, lambda: f64, s: &PathStats) -> f64 {
        let norm = match self {
            Supermartingale::U => s.b_n,
            Supermartingale::V => s.g_n,
        }
        .expect("normalizer checked at construction");
        lambda * s.s_n - coef * norm
    }
}

/// Sample mean of U_n(λ) or V_n(λ) tested against 1. These variables are
/// unbounded with heavy right tails, so the interval is a normal
/// approximation and the sample maximum is reported alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCheck {
    pub kind: Supermartingale,
    pub lambda: f64,
    pub param: f64,
    pub n_rep: u64,
    pub mean: f64,
    pub std_err: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub gamma: f64,
    pub sample_max: f64,
    pub status: VerdictStatus,
}

fn prepare(
    kind: Supermartingale,
    model: &DifferenceModel,
    lambda: f64,
    param: f64,
) -> Result<(PredictableTerms, f64)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain(format!("lambda must be > 0, got {lambda}")));
    }
    let terms = PredictableTerms::new(model, &kind.request(param))?;
    let probe = terms.stats(&[0.0])?;
    let available = match kind {
        Supermartingale::U => probe.b_n.is_some(),
        Supermartingale::V => probe.g_n.is_some(),
    };
    if !available {
        return Err(crate::Error::Unsupported(format!(
            "{kind:?} needs finite conditional moments, not available for {:?}",
            model.family()
        )));
    }
    Ok((terms, kind.coefficient(lambda, param)?))
}

#[allow(clippy::too_many_arguments)]
pub fn supermartingale_check(
    kind: Supermartingale,
    model: &DifferenceModel,
    n: usize,
    lambda: f64,
    param: f64,
    n_rep: u64,
    gamma: f64,
    seed: u64,
) -> Result<MeanCheck> {
    if n == 0 || n_rep < 2 {
        return Err(domain("path length must be >= 1 and n_rep >= 2"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let (terms, coef) = prepare(kind, model, lambda, param)?;
    let vals = exec::map_indexed(n_rep as usize, |r| {
        let s = terms.stats(&sample_xs(model, n, path_key(seed, r as u64))).expect("nonempty path");
        kind.log_value(coef, lambda, &s).exp()
    });
    let (mean, std_err) = exec::mean_and_se(&vals);
    let z = Normal::standard().inverse_cdf(0.5 + gamma / 2.0);
    let sample_max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let status = if mean - 3.0 * std_err <= 1.0 {
        VerdictStatus::Pass
    } else {
        VerdictStatus::ViolationEvidence
    };
    Ok(MeanCheck {
        kind,
        lambda,
        param,
        n_rep,
        mean,
        std_err,
        ci_lo: mean - z * std_err,
        ci_hi: mean + z * std_err,
        gamma,
        sample_max,
        status,
    })
}

/// E[U_n(λ)] or E[V_n(λ)] under Rademacher signs by enumeration.
pub fn exact_supermartingale_mean(kind: Supermartingale, n: usize, lambda: f64, param: f64) -> Result<f64> {
    let (_, coef) = prepare(kind, &DifferenceModel::rademacher(), lambda, param)?;
    rademacher_expectation(n, &kind.request(param), |s| kind.log_value(coef, lambda, s).exp())
}
