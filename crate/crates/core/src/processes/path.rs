use serde::{Deserialize, Serialize};

use super::model::DifferenceModel;
use crate::error::{domain, Error, Result};
use crate::rng::{tags, StreamKey};

/// One realized sequence of differences ξ_1..ξ_n.
#[derive(Debug, Clone)]
pub struct Path<'m> {
    pub xs: Vec<f64>,
    pub model: &'m DifferenceModel,
    pub replicate: u64,
}

/// Key of replicate `replicate` of the path stream under `master_seed`.
pub fn path_key(master_seed: u64, replicate: u64) -> StreamKey {
    StreamKey::new(master_seed).child(tags::PATH).child(replicate)
}

/// Draw `n` differences. Step `i` of replicate `r` reads only the substream
/// keyed by (master_seed, r, i).
pub fn sample_path(model: &DifferenceModel, n: usize, master_seed: u64, replicate: u64) -> Result<Path<'_>> {
    if n == 0 {
        return Err(domain("path length must be >= 1"));
    }
    let key = path_key(master_seed, replicate);
    Ok(Path {
        xs: sample_xs(model, n, key),
        model,
        replicate,
    })
}

pub(crate) fn sample_xs(model: &DifferenceModel, n: usize, key: StreamKey) -> Vec<f64> {
    (0..n as u64).map(|i| model.sample(&mut key.child(i).rng())).collect()
}

/// Parameters of the bracket processes to compute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsRequest {
    /// Truncation level y of [S]_n(y), ⟨S⟩_n(y), B_n(y).
    pub y: f64,
    /// Level a of H_n^a.
    pub a: f64,
    /// Moment order of G_n(β); `None` skips it.
    pub beta: Option<f64>,
}

impl Default for StatsRequest {
    fn default() -> Self {
        StatsRequest { y: 0.0, a: 0.0, beta: None }
    }
}

/// Bracket and variance processes of one path. Predictable (conditional)
/// terms are `None` when the model's corresponding moment is infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathStats {
    pub n: usize,
    pub request: StatsRequest,
    /// S_n
    pub s_n: f64,
    /// [S]_n = Σξ²
    pub sq_var: f64,
    /// [S]_n(y) = Σξ² 1{ξ > y}
    pub sq_var_above: f64,
    /// [S]_n^+ = Σ(ξ⁺)²
    pub pos_sq: f64,
    /// ⟨S⟩_n = ΣE[ξ²|F]
    pub cond_var: Option<f64>,
    /// ⟨S⟩_n(y) = ΣE[ξ² 1{ξ <= y}|F]
    pub cond_var_below: Option<f64>,
    /// B_n(y) = [S]_n(y) + ⟨S⟩_n(y)
    pub b_n: Option<f64>,
    /// H_n^a = Σξ² 1{|ξ| > a} + ⟨S⟩_n
    pub h_n: Option<f64>,
    /// ⟨S⟩_n^− = ΣE[(ξ⁻)²|F]
    pub neg_cond: Option<f64>,
    /// [S]_n^+(β) = Σ(ξ⁺)^β
    pub pos_pow: Option<f64>,
    /// ⟨S⟩_n^−(β) = ΣE[(ξ⁻)^β|F]
    pub neg_cond_pow: Option<f64>,
    /// G_n(β) = [S]_n^+(β) + ⟨S⟩_n^−(β)
    pub g_n: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Compute all requested bracket processes of `path`, using the model's
/// closed-form moments for the predictable terms.
pub fn path_stats(path: &Path<'_>, req: &StatsRequest) -> Result<PathStats> {
    stats_from_xs(&path.xs, path.model, req)
}

pub fn stats_from_xs(xs: &[f64], model: &DifferenceModel, req: &StatsRequest) -> Result<PathStats> {
    PredictableTerms::new(model, req)?.stats(xs)
}

/// Per-step predictable moments for one request. These are the same for
/// every path of an i.i.d. model, so simulations compute them once.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictableTerms {
    request: StatsRequest,
    second: Option<f64>,
    second_below_y: Option<f64>,
    neg_second: Option<f64>,
    neg_beta: Option<f64>,
}

impl PredictableTerms {
    pub fn new(model: &DifferenceModel, req: &StatsRequest) -> Result<Self> {
        if !(req.y >= 0.0) || !(req.a >= 0.0) {
            return Err(domain(format!("y and a must be >= 0, got y={} a={}", req.y, req.a)));
        }
        let neg_beta = match req.beta {
            None => None,
            Some(beta) => {
                if !(beta > 1.0 && beta < 2.0) {
                    return Err(domain(format!("beta must lie in (1, 2), got {beta}")));
                }
                let neg = model.neg_abs_moment(beta).ok_or_else(|| {
                    Error::Unsupported(format!("no closed-form E[(ξ⁻)^β] for {:?}", model.family()))
                })?;
                if !neg.is_finite() {
                    return Err(Error::Unsupported(format!(
                        "E[(ξ⁻)^{beta}] is infinite for {:?}",
                        model.family()
                    )));
                }
                Some(neg)
            }
        };
        Ok(PredictableTerms {
            request: *req,
            second: finite(model.second_moment()),
            second_below_y: finite(model.sq_moment_below(req.y)),
            neg_second: finite(model.neg_sq_moment()),
            neg_beta,
        })
    }

    pub fn request(&self) -> &StatsRequest {
        &self.request
    }

    pub fn stats(&self, xs: &[f64]) -> Result<PathStats> {
        if xs.is_empty() {
            return Err(domain("path is empty"));
        }
        let req = &self.request;
        let n = xs.len();
        let nf = n as f64;
        let (mut s_n, mut sq_var, mut sq_var_above, mut pos_sq, mut sq_outside_a) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut pos_pow = 0.0;
        for &x in xs {
            let sq = x * x;
            s_n += x;
            sq_var += sq;
            if x > req.y {
                sq_var_above += sq;
            }
            if x > 0.0 {
                pos_sq += sq;
                if let Some(beta) = req.beta {
                    pos_pow += x.powf(beta);
                }
            }
            if x.abs() > req.a {
                sq_outside_a += sq;
            }
        }
        let cond_var = self.second.map(|v| nf * v);
        let cond_var_below = self.second_below_y.map(|v| nf * v);
        let neg_cond_pow = self.neg_beta.map(|v| nf * v);
        Ok(PathStats {
            n,
            request: *req,
            s_n,
            sq_var,
            sq_var_above,
            pos_sq,
            cond_var,
            cond_var_below,
            b_n: cond_var_below.map(|c| sq_var_above + c),
            h_n: cond_var.map(|c| sq_outside_a + c),
            neg_cond: self.neg_second.map(|v| nf * v),
            pos_pow: neg_cond_pow.map(|_| pos_pow),
            neg_cond_pow,
            g_n: neg_cond_pow.map(|v| pos_pow + v),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::Family;

    fn stats(xs: &[f64], model: &DifferenceModel, y: f64) -> PathStats {
        stats_from_xs(xs, model, &StatsRequest { y, a: y, beta: Some(1.5) }).unwrap()
    }

    #[test]
    fn rademacher_hand_example() {
        let m = DifferenceModel::rademacher();
        let s = stats(&[1.0, -1.0, 1.0], &m, 0.0);
        assert_eq!(s.pos_sq, 2.0);
        assert_eq!(s.neg_cond, Some(1.5));
        assert_eq!(s.b_n, Some(3.5));
        assert_eq!(s.b_n.unwrap(), s.pos_sq + s.neg_cond.unwrap());
        assert_eq!(s.s_n, 1.0);
        assert_eq!(s.sq_var, 3.0);
    }

    #[test]
    fn y_above_support_gives_conditional_variance() {
        let m = DifferenceModel::rademacher();
        let s = stats(&[1.0, -1.0, 1.0, 1.0], &m, 1.0);
        assert_eq!(s.sq_var_above, 0.0);
        assert_eq!(s.b_n, s.cond_var);
        // all ξ <= y: the realized part of H_n^y vanishes
        assert_eq!(s.h_n, s.cond_var);
    }

    #[test]
    fn all_zero_path() {
        let m = DifferenceModel::new(Family::Gaussian { sd: 2.0 }).unwrap();
        let s = stats(&[0.0; 5], &m, 0.5);
        assert_eq!((s.s_n, s.sq_var, s.sq_var_above, s.pos_sq), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(s.cond_var, Some(20.0));
        assert_eq!(s.neg_cond, Some(10.0));
        assert_eq!(s.pos_pow, Some(0.0));
        assert!((s.g_n.unwrap() - 5.0 * m.neg_abs_moment(1.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = DifferenceModel::rademacher();
        let a = sample_path(&m, 5, 11, 3).unwrap();
        let b = sample_path(&m, 5, 11, 3).unwrap();
        assert_eq!(a.xs, b.xs);
        let c = sample_path(&m, 5, 11, 4).unwrap();
        assert_ne!(a.xs, sample_path(&m, 5, 12, 3).unwrap().xs);
        assert_eq!(c.xs.len(), 5);
        assert!(sample_path(&m, 0, 1, 1).is_err());
    }

    #[test]
    fn rademacher_mean_within_clt_width() {
        let m = DifferenceModel::rademacher();
        let p = sample_path(&m, 10_000, 5, 0).unwrap();
        let mean = p.xs.iter().sum::<f64>() / 1e4;
        assert!(mean.abs() <= 4.0 / 100.0, "{mean}");
    }

    #[test]
    fn bounded_above_paths_respect_cap() {
        let m = DifferenceModel::new(Family::BoundedAbove {
            y_cap: 1.0,
            base: Box::new(Family::Gaussian { sd: 1.0 }),
        })
        .unwrap();
        let p = sample_path(&m, 5000, 1, 0).unwrap();
        assert!(p.xs.iter().all(|&x| x <= 1.0 + 1e-12));
    }

    #[test]
    fn beta_statistic_unsupported_for_capped_normals() {
        let m = DifferenceModel::new(Family::BoundedAbove {
            y_cap: 1.0,
            base: Box::new(Family::Gaussian { sd: 1.0 }),
        })
        .unwrap();
        let err = stats_from_xs(&[0.1], &m, &StatsRequest { y: 0.0, a: 0.0, beta: Some(1.5) }).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        let heavy = DifferenceModel::new(Family::CenteredPareto { beta_tail: 1.4, scale: 1.0 }).unwrap();
        let err = stats_from_xs(&[0.1], &heavy, &StatsRequest { y: 0.0, a: 0.0, beta: Some(1.5) }).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn infinite_variance_leaves_predictable_terms_empty() {
        let m = DifferenceModel::new(Family::CenteredPareto { beta_tail: 1.9, scale: 1.0 }).unwrap();
        let s = stats(&[2.0, -3.0], &m, 0.0);
        assert_eq!(s.cond_var, None);
        assert_eq!(s.b_n, None);
        assert!(s.g_n.is_some());
    }
}
