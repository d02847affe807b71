use serde::{Deserialize, Serialize};

use crate::bounds::{bernstein_rate, beta_rate, f_rate};
use crate::error::{domain, Result};
use crate::exec;
use crate::processes::{sample_xs, DifferenceModel, PathStats, PredictableTerms, StatsRequest};
use crate::rng::{tags, StreamKey};

use super::event::TIE_TOL;
use super::oracle::all_rademacher_stats;

/// Which rate/normalizer pair enters exp{−(p−1)·rate·N}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pair", rename_all = "snake_case")]
pub enum RatePair {
    /// rate f(x, y), normalizer B_n(y), event S_n ≥ x·B_n(y)
    Bracket { x: f64, y: f64 },
    /// rate x²/(2(1+xy/3)) ≤ f(x, y), same normalizer and event
    BracketBernstein { x: f64, y: f64 },
    /// rate (β−1)(x/β)^{β/(β−1)}, normalizer G_n(β), event S_n ≥ x·G_n(β)
    Beta { x: f64, beta: f64 },
}

impl RatePair {
    pub fn rate(&self) -> Result<f64> {
        match *self {
            RatePair::Bracket { x, y } => f_rate(x, y),
            RatePair::BracketBernstein { x, y } => {
                if !(x >= 0.0 && y >= 0.0) {
                    return Err(domain(format!("x and y must be >= 0, got x={x} y={y}")));
                }
                Ok(bernstein_rate(x, y))
            }
            RatePair::Beta { x, beta } => beta_rate(x, beta),
        }
    }

    pub fn x(&self) -> f64 {
        match *self {
            RatePair::Bracket { x, .. } | RatePair::BracketBernstein { x, .. } | RatePair::Beta { x, .. } => x,
        }
    }

    pub fn request(&self) -> StatsRequest {
        match *self {
            RatePair::Bracket { y, .. } | RatePair::BracketBernstein { y, .. } => StatsRequest { y, a: 0.0, beta: None },
            RatePair::Beta { beta, .. } => StatsRequest { y: 0.0, a: 0.0, beta: Some(beta) },
        }
    }

    fn normalizer(&self, s: &PathStats) -> Result<f64> {
        let v = match self {
            RatePair::Bracket { .. } | RatePair::BracketBernstein { .. } => s.b_n,
            RatePair::Beta { .. } => s.g_n,
        };
        v.ok_or_else(|| crate::Error::Unsupported("normalizer not available for this model".into()))
    }
}

/// A fixed set of equally weighted draws (normalizer, event indicator). All
/// evaluations over p reuse it, so the objective is deterministic in p.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationSample {
    rate: f64,
    normalizers: Vec<f64>,
    hits: Vec<bool>,
}

/// Value of (E[exp{−(p−1)·rate·N}·1])^{1/p} with a delta-method standard
/// error (zero for exact samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationEstimate {
    pub p: f64,
    pub value: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedBound {
    pub p_star: f64,
    pub value: f64,
    pub std_err: f64,
}

/// Search interval for ln(p−1): p from 1 + 1e−3 to 51.
pub const LOG_P_MINUS_ONE_RANGE: (f64, f64) = (-6.907_755_278_982_137, 3.912_023_005_428_146);
pub const DEFAULT_P_MAX: f64 = 51.0;
pub const GOLDEN_ITERATIONS: usize = 60;

impl ExpectationSample {
    /// Arbitrary rate and per-draw (normalizer, hit) pairs.
    pub fn from_parts(rate: f64, normalizers: Vec<f64>, hits: Vec<bool>) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(domain(format!("rate must be finite and >= 0, got {rate}")));
        }
        if normalizers.is_empty() || normalizers.len() != hits.len() {
            return Err(domain("sample must be nonempty with one indicator per normalizer"));
        }
        if normalizers.iter().any(|v| !(*v >= 0.0)) {
            return Err(domain("normalizers must be >= 0"));
        }
        Ok(ExpectationSample { rate, normalizers, hits })
    }

    fn from_stats(pair: &RatePair, stats: &[PathStats]) -> Result<Self> {
        let x = pair.x();
        let mut normalizers = Vec::with_capacity(stats.len());
        let mut hits = Vec::with_capacity(stats.len());
        for s in stats {
            let norm = pair.normalizer(s)?;
            normalizers.push(norm);
            hits.push(norm > 0.0 && s.s_n / norm >= x - TIE_TOL * x.abs().max(1.0));
        }
        Self::from_parts(pair.rate()?, normalizers, hits)
    }

    /// `n_rep` simulated paths drawn from a stream separate from the
    /// tail-probability paths.
    pub fn simulate(model: &DifferenceModel, n: usize, pair: &RatePair, n_rep: u64, seed: u64) -> Result<Self> {
        if n == 0 || n_rep == 0 {
            return Err(domain("path length and n_rep must be >= 1"));
        }
        let terms = PredictableTerms::new(model, &pair.request())?;
        let root = StreamKey::new(seed).child(tags::BOUND_SAMPLE);
        let stats = exec::map_indexed(n_rep as usize, |r| terms.stats(&sample_xs(model, n, root.child(r as u64))))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Self::from_stats(pair, &stats)
    }

    /// All 2^n Rademacher sign sequences; the resulting values are exact.
    pub fn exact_rademacher(n: usize, pair: &RatePair) -> Result<Self> {
        let stats = all_rademacher_stats(n, &pair.request())?;
        Self::from_stats(pair, &stats)
    }

    pub fn len(&self) -> usize {
        self.normalizers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalizers.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn evaluate(&self, p: f64, indicator: bool) -> Result<ExpectationEstimate> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(domain(format!("p must be > 1, got {p}")));
        }
        let k = (p - 1.0) * self.rate;
        // log-sum-exp over exponents −k·N_i; the largest is the smallest N
        let exps: Vec<f64> = self
            .normalizers
            .iter()
            .zip(&self.hits)
            .map(|(&v, &h)| if indicator && !h { f64::NEG_INFINITY } else { -k * v })
            .collect();
        let m = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Ok(ExpectationEstimate { p, value: 0.0, std_err: 0.0 });
        }
        let scaled: Vec<f64> = exps.iter().map(|&e| (e - m).exp()).collect();
        let (mean_scaled, se_scaled) = exec::mean_and_se(&scaled);
        let log_mean = m + mean_scaled.ln();
        let value = (log_mean / p).exp();
        // d/dμ μ^{1/p} = μ^{1/p−1}/p, written relative to the scaled mean
        let std_err = value / p * se_scaled / mean_scaled;
        Ok(ExpectationEstimate { p, value, std_err })
    }

    /// Golden-section search for the infimum over p on ln(p−1). Returns the
    /// best evaluated point.
    pub fn optimize(&self, indicator: bool) -> Result<OptimizedBound> {
        self.optimize_up_to(indicator, DEFAULT_P_MAX)
    }

    /// As [`optimize`](Self::optimize) with the upper end of the p range set
    /// to `p_max`.
    pub fn optimize_up_to(&self, indicator: bool, p_max: f64) -> Result<OptimizedBound> {
        let lo = LOG_P_MINUS_ONE_RANGE.0;
        if !(p_max > 1.0 + lo.exp()) || !p_max.is_finite() {
            return Err(domain(format!("p_max must be finite and > {}, got {p_max}", 1.0 + lo.exp())));
        }
        let eval = |u: f64| self.evaluate(1.0 + u.exp(), indicator);
        let (mut a, mut b) = (lo, (p_max - 1.0).ln());
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        let mut best = [eval(a)?, eval(b)?, fc, fd]
            .into_iter()
            .min_by(|l, r| l.value.total_cmp(&r.value))
            .expect("nonempty");
        for _ in 0..GOLDEN_ITERATIONS {
            if fc.value <= fd.value {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = eval(c)?;
                if fc.value < best.value {
                    best = fc;
                }
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = eval(d)?;
                if fd.value < best.value {
                    best = fd;
                }
            }
        }
        Ok(OptimizedBound {
            p_star: best.p,
            value: best.value,
            std_err: best.std_err,
        })
    }
}

pub fn expectation_bound(
    model: &DifferenceModel,
    n: usize,
    pair: &RatePair,
    p: f64,
    indicator: bool,
    n_rep: u64,
    seed: u64,
) -> Result<ExpectationEstimate> {
    if !(p > 1.0) {
        return Err(domain(format!("p must be > 1, got {p}")));
    }
    ExpectationSample::simulate(model, n, pair, n_rep, seed)?.evaluate(p, indicator)
}

pub fn optimize_over_p(
    model: &DifferenceModel,
    n: usize,
    pair: &RatePair,
    indicator: bool,
    n_rep: u64,
    seed: u64,
) -> Result<OptimizedBound> {
    ExpectationSample::simulate(model, n, pair, n_rep, seed)?.optimize(indicator)
}
