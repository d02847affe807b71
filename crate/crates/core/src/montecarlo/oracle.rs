use serde::{Deserialize, Serialize};

use super::event::TailEvent;
use crate::error::{domain, Error, Result};
use crate::exec;
use crate::processes::{DifferenceModel, PathStats, PredictableTerms, StatsRequest};

/// Largest n for which all 2^n sign sequences are enumerated.
pub const MAX_ENUMERATION: usize = 20;

/// Exact probability hits / outcomes under uniform Rademacher signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactProbability {
    pub hits: u64,
    pub outcomes: u64,
}

impl ExactProbability {
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.outcomes as f64
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("path length must be >= 1"));
    }
    if n > MAX_ENUMERATION {
        return Err(Error::Size(format!(
            "exact enumeration needs n <= {MAX_ENUMERATION}, got {n}"
        )));
    }
    Ok(())
}

/// Sign sequence number `mask`: bit i set means ξ_{i+1} = +1.
pub fn sign_sequence(n: usize, mask: u64) -> Vec<f64> {
    (0..n).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

/// Exact P(event) for each event, with ξ_i i.i.d. uniform on {−1, +1}.
pub fn exact_tails_rademacher(n: usize, events: &[TailEvent]) -> Result<Vec<ExactProbability>> {
    check_n(n)?;
    let model = DifferenceModel::rademacher();
    let terms = events
        .iter()
        .map(|e| PredictableTerms::new(&model, &e.request))
        .collect::<Result<Vec<_>>>()?;
    let probe = sign_sequence(n, 0);
    for (ev, t) in events.iter().zip(&terms) {
        ev.holds(&t.stats(&probe)?)?;
    }
    let outcomes = 1u64 << n;
    let counts = exec::sum_counts(outcomes as usize, events.len(), |mask, acc| {
        let xs = sign_sequence(n, mask as u64);
        for (i, (ev, t)) in events.iter().zip(&terms).enumerate() {
            let s = t.stats(&xs).expect("validated on probe path");
            if ev.holds(&s).expect("validated on probe path") {
                acc[i] += 1;
            }
        }
    });
    Ok(counts.into_iter().map(|hits| ExactProbability { hits, outcomes }).collect())
}

pub fn exact_tail_rademacher(n: usize, event: &TailEvent) -> Result<ExactProbability> {
    Ok(exact_tails_rademacher(n, std::slice::from_ref(event))?[0])
}

/// Path statistics of every sign sequence, indexed by mask.
pub fn all_rademacher_stats(n: usize, req: &StatsRequest) -> Result<Vec<PathStats>> {
    check_n(n)?;
    let terms = PredictableTerms::new(&DifferenceModel::rademacher(), req)?;
    exec::map_indexed(1usize << n, |mask| terms.stats(&sign_sequence(n, mask as u64)))
        .into_iter()
        .collect()
}

/// Exact E[g(path)] under Rademacher signs.
pub fn rademacher_expectation<G>(n: usize, req: &StatsRequest, g: G) -> Result<f64>
where
    G: Fn(&PathStats) -> f64 + Sync + Send,
{
    let stats = all_rademacher_stats(n, req)?;
    let vals = exec::map_indexed(stats.len(), |i| g(&stats[i]));
    Ok(exec::pairwise_sum(&vals) / vals.len() as f64)
}
