use serde::{Deserialize, Serialize};

use crate::bounds::{evaluate_bound, BoundKind, BoundSpec, RateInputs};
use crate::error::{domain, Error, Result};
use crate::exec;
use crate::montecarlo::{
    domination_check, estimate_with, exact_status, sign_sequence, DominationVerdict, ExpectationSample,
    VerdictStatus, MAX_ENUMERATION, MIN_REPLICATES, TIE_TOL,
};
use crate::processes::DifferenceModel;
use crate::rng::{open_unit, tags, StreamKey};

/// Smallest noise standard deviation accepted; the exponents degenerate at σ = 0.
pub const MIN_SIGMA: f64 = 1e-3;

/// Distribution of the i.i.d. regressors φ_k, all supported in [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RegressorLaw {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl RegressorLaw {
    fn validate(&self) -> Result<()> {
        let inside = |v: f64| (-1.0..=1.0).contains(&v);
        match *self {
            RegressorLaw::Constant { value } if inside(value) => Ok(()),
            RegressorLaw::Uniform { lo, hi } if inside(lo) && inside(hi) && lo < hi => Ok(()),
            other => Err(domain(format!("regressor law must be supported in [-1, 1], got {other:?}"))),
        }
    }

    fn sample(&self, key: StreamKey) -> f64 {
        match *self {
            RegressorLaw::Constant { value } => value,
            RegressorLaw::Uniform { lo, hi } => lo + (hi - lo) * open_unit(&mut key.rng()),
        }
    }
}

/// X_{k} = θφ_{k−1} + ε_k with noise bounded above by `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub theta: f64,
    pub phi: RegressorLaw,
    pub eps: DifferenceModel,
    pub n: usize,
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        self.phi.validate()?;
        if self.n == 0 {
            return Err(domain("horizon n must be >= 1"));
        }
        if !self.theta.is_finite() {
            return Err(domain("theta must be finite"));
        }
        self.noise_cap()?;
        let sigma = self.sigma();
        if !(sigma >= MIN_SIGMA) {
            return Err(domain(format!("noise sd must be >= {MIN_SIGMA}, got {sigma}")));
        }
        Ok(())
    }

    /// Upper bound y of the noise.
    pub fn noise_cap(&self) -> Result<f64> {
        self.eps
            .preconditions()
            .bounded_above
            .ok_or_else(|| domain("noise model must be bounded above"))
    }

    pub fn sigma(&self) -> f64 {
        self.eps.second_moment().sqrt()
    }
}

/// One realized regression: φ_0..φ_{n−1}, ε_1..ε_n and X_1..X_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRun {
    pub theta: f64,
    pub phi: Vec<f64>,
    pub eps: Vec<f64>,
    pub obs: Vec<f64>,
}

impl RegressionRun {
    pub fn from_parts(theta: f64, phi: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if phi.len() != eps.len() || phi.is_empty() {
            return Err(domain("phi and eps must have the same nonzero length"));
        }
        if phi.iter().any(|v| !(v.abs() <= 1.0)) {
            return Err(domain("regressors must satisfy |phi| <= 1"));
        }
        let obs = phi.iter().zip(&eps).map(|(p, e)| theta * p + e).collect();
        Ok(RegressionRun { theta, phi, eps, obs })
    }

    pub fn simulate(config: &RegressionConfig, seed: u64, replicate: u64) -> Result<Self> {
        config.validate()?;
        Ok(simulate_unchecked(config, seed, replicate))
    }

    pub fn phi_sq_sum(&self) -> f64 {
        self.phi.iter().map(|v| v * v).sum()
    }

    /// Σφ_{k−1}ε_k / Σφ²_{k−1}, the estimation error written through the noise.
    pub fn noise_error(&self) -> Result<f64> {
        let den = self.phi_sq_sum();
        if !(den > 0.0) {
            return Err(Error::Degenerate("all regressors are zero".into()));
        }
        Ok(self.phi.iter().zip(&self.eps).map(|(p, e)| p * e).sum::<f64>() / den)
    }
}

fn simulate_unchecked(config: &RegressionConfig, seed: u64, replicate: u64) -> RegressionRun {
    let root = StreamKey::new(seed);
    let phi_key = root.child(tags::REGRESSOR).child(replicate);
    let eps_key = root.child(tags::NOISE).child(replicate);
    let phi = (0..config.n as u64).map(|i| config.phi.sample(phi_key.child(i))).collect();
    let eps = (0..config.n as u64)
        .map(|i| config.eps.sample(&mut eps_key.child(i).rng()))
        .collect();
    RegressionRun::from_parts(config.theta, phi, eps).expect("validated config")
}

/// θ̂_n = Σφ_{k−1}X_k / Σφ²_{k−1}.
pub fn ls_estimate(run: &RegressionRun) -> Result<f64> {
    let den = run.phi_sq_sum();
    if !(den > 0.0) {
        return Err(Error::Degenerate("all regressors are zero".into()));
    }
    Ok(run.phi.iter().zip(&run.obs).map(|(p, x)| p * x).sum::<f64>() / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTheorem {
    /// P(|θ̂−θ| ≥ x) against the optimized expectation bound.
    Expectation,
    /// P(|θ̂−θ|√Σφ² ≥ x, b ≤ √Σφ² ≤ bM) against thm33_regression.
    Windowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionGrid {
    pub x: Vec<f64>,
    /// Window base; used by [`RegressionTheorem::Windowed`] only.
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionVerdict {
    pub theorem: RegressionTheorem,
    pub x: f64,
    pub b: Option<f64>,
    pub m: Option<f64>,
    pub p_star: Option<f64>,
    pub verdict: DominationVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    x: f64,
    b: Option<f64>,
    m: Option<f64>,
}

fn cells(thm: RegressionTheorem, grid: &RegressionGrid) -> Result<Vec<Cell>> {
    if grid.x.is_empty() {
        return Err(domain("x grid is empty"));
    }
    Ok(match thm {
        RegressionTheorem::Expectation => grid.x.iter().map(|&x| Cell { x, b: None, m: None }).collect(),
        RegressionTheorem::Windowed => {
            if grid.b.is_empty() || grid.m.is_empty() {
                return Err(domain("windowed regression needs nonempty b and M grids"));
            }
            let mut out = Vec::new();
            for &x in &grid.x {
                for &b in &grid.b {
                    for &m in &grid.m {
                        out.push(Cell { x, b: Some(b), m: Some(m) });
                    }
                }
            }
            out
        }
    })
}

fn at_least(v: f64, level: f64) -> bool {
    v >= level - TIE_TOL * level.abs().max(1.0)
}

fn hit(thm: RegressionTheorem, cell: &Cell, err: f64, norm: f64) -> bool {
    match thm {
        RegressionTheorem::Expectation => at_least(err.abs(), cell.x),
        RegressionTheorem::Windowed => {
            let (b, m) = (cell.b.expect("windowed cell"), cell.m.expect("windowed cell"));
            at_least(err.abs() * norm, cell.x) && at_least(norm, b) && at_least(b * m, norm)
        }
    }
}

/// Rate x²/(2(σ²+xy/3)) of the expectation bound.
fn expectation_rate(x: f64, sigma: f64, y: f64) -> f64 {
    x * x / (2.0 * (sigma * sigma + x * y / 3.0))
}

fn windowed_bound(cell: &Cell, sigma: f64, y: f64) -> Result<f64> {
    let params = RateInputs {
        x: Some(cell.x),
        sigma: Some(sigma),
        y: Some(y),
        b: cell.b,
        m: cell.m,
        ..Default::default()
    };
    evaluate_bound(&BoundSpec::new(BoundKind::Thm33Regression, params)?)
}

/// Empirical q-quantile of √Σφ² over a pilot sample of regressor paths.
pub fn regressor_norm_quantile(config: &RegressionConfig, q: f64, n_pilot: u64, seed: u64) -> Result<f64> {
    config.validate()?;
    if !(q > 0.0 && q < 1.0) || n_pilot == 0 {
        return Err(domain("quantile level must lie in (0, 1) and n_pilot >= 1"));
    }
    let root = StreamKey::new(seed).child(tags::PILOT).child(tags::REGRESSOR);
    let mut vals = exec::map_indexed(n_pilot as usize, |r| {
        let key = root.child(r as u64);
        (0..config.n as u64)
            .map(|i| config.phi.sample(key.child(i)).powi(2))
            .sum::<f64>()
            .sqrt()
    });
    vals.sort_by(f64::total_cmp);
    let idx = ((q * vals.len() as f64).ceil() as usize).clamp(1, vals.len()) - 1;
    Ok(vals[idx])
}

/// Monte Carlo verification of the regression deviation bounds. The
/// expectation bound is 2·inf_p (E[exp{−(p−1)·rate·Σφ²}])^{1/p}, evaluated
/// over an independent sample of `n_rep` regressor paths.
pub fn verify_regression(
    config: &RegressionConfig,
    thm: RegressionTheorem,
    grid: &RegressionGrid,
    n_rep: u64,
    gamma: f64,
    seed: u64,
) -> Result<Vec<RegressionVerdict>> {
    config.validate()?;
    if n_rep < MIN_REPLICATES {
        return Err(domain(format!("n_rep must be >= {MIN_REPLICATES}, got {n_rep}")));
    }
    let cells = cells(thm, grid)?;
    let sigma = config.sigma();
    let y = config.noise_cap()?;
    let bounds: Vec<(f64, Option<f64>)> = match thm {
        RegressionTheorem::Expectation => {
            let root = StreamKey::new(seed).child(tags::BOUND_SAMPLE).child(tags::REGRESSOR);
            let norms = exec::map_indexed(n_rep as usize, |r| {
                let key = root.child(r as u64);
                (0..config.n as u64).map(|i| config.phi.sample(key.child(i)).powi(2)).sum::<f64>()
            });
            let hits = vec![true; norms.len()];
            let mut out = Vec::new();
            for c in &cells {
                let sample = ExpectationSample::from_parts(expectation_rate(c.x, sigma, y), norms.clone(), hits.clone())?;
                let opt = sample.optimize(false)?;
                out.push((2.0 * opt.value, Some(opt.p_star)));
            }
            out
        }
        RegressionTheorem::Windowed => cells
            .iter()
            .map(|c| Ok((windowed_bound(c, sigma, y)?, None)))
            .collect::<Result<_>>()?,
    };
    let ests = estimate_with(n_rep, cells.len(), gamma, |r, acc| {
        let run = simulate_unchecked(config, seed, r);
        // an all-zero design leaves θ̂ undefined; count it as no deviation
        let Ok(err) = ls_estimate(&run).map(|t| t - run.theta) else { return };
        let norm = run.phi_sq_sum().sqrt();
        for (i, c) in cells.iter().enumerate() {
            if hit(thm, c, err, norm) {
                acc[i] += 1;
            }
        }
    });
    Ok(cells
        .into_iter()
        .zip(bounds)
        .zip(ests)
        .map(|((c, (bound, p_star)), est)| RegressionVerdict {
            theorem: thm,
            x: c.x,
            b: c.b,
            m: c.m,
            p_star,
            verdict: domination_check(&est, bound),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRegressionRecord {
    pub theorem: RegressionTheorem,
    pub x: f64,
    pub b: Option<f64>,
    pub m: Option<f64>,
    pub exact: f64,
    pub bound: f64,
    pub status: VerdictStatus,
}

/// Exact check with φ ≡ 1 and ε_k = ±`scale` with equal probability, by
/// enumerating all 2^n noise sign sequences.
pub fn exact_regression(
    n: usize,
    scale: f64,
    thm: RegressionTheorem,
    grid: &RegressionGrid,
) -> Result<Vec<ExactRegressionRecord>> {
    if n == 0 || n > MAX_ENUMERATION {
        return Err(Error::Size(format!("exact regression needs 1 <= n <= {MAX_ENUMERATION}, got {n}")));
    }
    if !(scale >= MIN_SIGMA) {
        return Err(domain(format!("noise scale must be >= {MIN_SIGMA}, got {scale}")));
    }
    let cells = cells(thm, grid)?;
    let counts = exec::sum_counts(1usize << n, cells.len(), |mask, acc| {
        let eps: Vec<f64> = sign_sequence(n, mask as u64).into_iter().map(|s| s * scale).collect();
        let run = RegressionRun::from_parts(0.0, vec![1.0; n], eps).expect("valid run");
        let err = ls_estimate(&run).expect("nonzero design");
        let norm = (n as f64).sqrt();
        for (i, c) in cells.iter().enumerate() {
            if hit(thm, c, err, norm) {
                acc[i] += 1;
            }
        }
    });
    let total = (1u64 << n) as f64;
    cells
        .into_iter()
        .zip(counts)
        .map(|(c, hits)| {
            let bound = match thm {
                RegressionTheorem::Expectation => {
                    let sample = ExpectationSample::from_parts(
                        expectation_rate(c.x, scale, scale),
                        vec![n as f64],
                        vec![true],
                    )?;
                    2.0 * sample.optimize(false)?.value
                }
                RegressionTheorem::Windowed => windowed_bound(&c, scale, scale)?,
            };
            let exact = hits as f64 / total;
            Ok(ExactRegressionRecord {
                theorem: thm,
                x: c.x,
                b: c.b,
                m: c.m,
                exact,
                bound,
                status: exact_status(exact, bound),
            })
        })
        .collect()
}
