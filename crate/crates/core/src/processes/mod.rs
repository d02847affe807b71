//! Martingale-difference models, path generation and bracket processes.

mod model;
mod normal;
mod path;

pub use model::{DifferenceModel, Family, Preconditions};
pub use path::{
    path_key, path_stats, sample_path, stats_from_xs, Path, PathStats, PredictableTerms, StatsRequest,
};
pub(crate) use path::sample_xs;

use serde::Serialize;

/// Heavy-on-left means E[T_a(ξ)] <= 0 for all a > 0. Values up to this
/// tolerance count as zero.
pub const HEAVY_ON_LEFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeavyOnLeftVerdict {
    pub passed: bool,
    /// Grid point with the largest truncated mean.
    pub worst_a: f64,
    pub worst_value: f64,
}

/// Check E[T_a(ξ)] <= 0 on every grid point, reporting the worst offender.
pub fn heavy_on_left_verdict(model: &DifferenceModel, a_grid: &[f64]) -> HeavyOnLeftVerdict {
    let mut worst = (f64::NAN, f64::NEG_INFINITY);
    for &a in a_grid {
        // invalid grid points are skipped; a > 0 is required
        if let Ok(v) = model.truncated_mean(a) {
            if v > worst.1 {
                worst = (a, v);
            }
        }
    }
    HeavyOnLeftVerdict {
        passed: worst.1 <= HEAVY_ON_LEFT_TOL,
        worst_a: worst.0,
        worst_value: worst.1,
    }
}
