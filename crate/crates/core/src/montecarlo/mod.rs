mod estimate;
mod event;
mod expectation;
mod interval;
mod oracle;
mod supermartingale;
mod verdict;

pub use estimate::{
    estimate_tail, estimate_tails, estimate_with, statistic_quantile, McEstimate, DEFAULT_GAMMA, MIN_REPLICATES,
};
pub use event::{Statistic, TailEvent, Window, TIE_TOL};
pub use expectation::{
    expectation_bound, optimize_over_p, ExpectationEstimate, ExpectationSample, OptimizedBound, RatePair,
    DEFAULT_P_MAX, GOLDEN_ITERATIONS, LOG_P_MINUS_ONE_RANGE,
};
pub use interval::clopper_pearson;
pub use oracle::{
    all_rademacher_stats, exact_tail_rademacher, exact_tails_rademacher, rademacher_expectation, sign_sequence,
    ExactProbability, MAX_ENUMERATION,
};
pub use supermartingale::{exact_supermartingale_mean, supermartingale_check, MeanCheck, Supermartingale};
pub use verdict::{domination_check, exact_status, DominationVerdict, VerdictStatus, EXACT_REL_TOL};
