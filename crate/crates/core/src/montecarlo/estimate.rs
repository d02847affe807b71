use serde::{Deserialize, Serialize};

use super::event::{Statistic, TailEvent};
use super::interval::clopper_pearson;
use crate::error::{domain, Result};
use crate::exec;
use crate::processes::{path_key, sample_xs, DifferenceModel, PredictableTerms, StatsRequest};
use crate::rng::{tags, StreamKey};

pub const MIN_REPLICATES: u64 = 100;
pub const DEFAULT_GAMMA: f64 = 0.99;

/// Hit count of a binary event with its Clopper–Pearson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n_rep: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub gamma: f64,
}

impl McEstimate {
    pub fn from_counts(hits: u64, n_rep: u64, gamma: f64) -> Self {
        let (ci_lo, ci_hi) = clopper_pearson(hits, n_rep, gamma);
        let p_hat = hits as f64 / n_rep as f64;
        McEstimate {
            n_rep,
            hits,
            p_hat,
            ci_lo: ci_lo.min(p_hat),
            ci_hi: ci_hi.max(p_hat),
            gamma,
        }
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}

fn check_args(n: usize, n_rep: u64, gamma: f64) -> Result<()> {
    if n == 0 {
        return Err(domain("path length must be >= 1"));
    }
    if n_rep < MIN_REPLICATES {
        return Err(domain(format!("n_rep must be >= {MIN_REPLICATES}, got {n_rep}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// Count hits of `width` events over `n_rep` replicates. `f(r, counts)`
/// evaluates replicate `r` and increments the counters of the events it hits.
pub fn estimate_with<F>(n_rep: u64, width: usize, gamma: f64, f: F) -> Vec<McEstimate>
where
    F: Fn(u64, &mut [u64]) + Sync + Send,
{
    let counts = exec::sum_counts(n_rep as usize, width, |r, acc| f(r as u64, acc));
    counts
        .into_iter()
        .map(|h| McEstimate::from_counts(h, n_rep, gamma))
        .collect()
}

/// Groups events by the statistics they need so each path is summarised
/// once per distinct request.
struct EventPlan {
    terms: Vec<PredictableTerms>,
    slot: Vec<usize>,
}

impl EventPlan {
    fn new(model: &DifferenceModel, requests: impl Iterator<Item = StatsRequest>) -> Result<Self> {
        let mut terms: Vec<PredictableTerms> = Vec::new();
        let mut slot = Vec::new();
        for req in requests {
            match terms.iter().position(|t| *t.request() == req) {
                Some(i) => slot.push(i),
                None => {
                    terms.push(PredictableTerms::new(model, &req)?);
                    slot.push(terms.len() - 1);
                }
            }
        }
        Ok(EventPlan { terms, slot })
    }
}

/// Estimate P(event) for each event from the same `n_rep` paths.
pub fn estimate_tails(
    model: &DifferenceModel,
    n: usize,
    events: &[TailEvent],
    n_rep: u64,
    gamma: f64,
    master_seed: u64,
) -> Result<Vec<McEstimate>> {
    check_args(n, n_rep, gamma)?;
    let plan = EventPlan::new(model, events.iter().map(|e| e.request))?;
    // surface unsupported statistics before the parallel loop
    let probe = sample_xs(model, n, path_key(master_seed, 0));
    for (ev, &slot) in events.iter().zip(&plan.slot) {
        ev.holds(&plan.terms[slot].stats(&probe)?)?;
    }
    Ok(estimate_with(n_rep, events.len(), gamma, |r, acc| {
        let xs = sample_xs(model, n, path_key(master_seed, r));
        let stats: Vec<_> = plan
            .terms
            .iter()
            .map(|t| t.stats(&xs).expect("validated on probe path"))
            .collect();
        for (i, (ev, &slot)) in events.iter().zip(&plan.slot).enumerate() {
            if ev.holds(&stats[slot]).expect("validated on probe path") {
                acc[i] += 1;
            }
        }
    }))
}

pub fn estimate_tail(
    model: &DifferenceModel,
    n: usize,
    event: &TailEvent,
    n_rep: u64,
    gamma: f64,
    master_seed: u64,
) -> Result<McEstimate> {
    Ok(estimate_tails(model, n, std::slice::from_ref(event), n_rep, gamma, master_seed)?.remove(0))
}

/// Empirical `q`-quantile of a statistic over a pilot sample drawn from a
/// stream disjoint from the estimation paths.
pub fn statistic_quantile(
    model: &DifferenceModel,
    n: usize,
    stat: Statistic,
    request: StatsRequest,
    q: f64,
    n_pilot: u64,
    master_seed: u64,
) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    if n_pilot == 0 || n == 0 {
        return Err(domain("pilot size and path length must be >= 1"));
    }
    let terms = PredictableTerms::new(model, &request)?;
    let root = StreamKey::new(master_seed).child(tags::PILOT);
    let vals: Vec<Result<f64>> = exec::map_indexed(n_pilot as usize, |r| {
        let xs = sample_xs(model, n, root.child(r as u64));
        stat.value(&terms.stats(&xs)?)
    });
    let mut vals = vals.into_iter().collect::<Result<Vec<f64>>>()?;
    vals.sort_by(f64::total_cmp);
    let idx = ((q * vals.len() as f64).ceil() as usize).clamp(1, vals.len()) - 1;
    Ok(vals[idx])
}
