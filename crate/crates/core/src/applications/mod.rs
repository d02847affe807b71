mod regression;
mod tsp;
mod tstat;

pub use regression::{
    exact_regression, ls_estimate, regressor_norm_quantile, verify_regression, ExactRegressionRecord, RegressionConfig,
    RegressionGrid, RegressionRun, RegressionTheorem, RegressionVerdict, RegressorLaw, MIN_SIGMA,
};
pub use tsp::{
    mean_tour_length, random_points, tsp_martingale_diffs, tsp_tour_length, verify_tsp, MartingaleDiffs, Point,
    SignPattern, TourLength, TspConfig, TspReport, TspVerdict, MAX_EXACT_TOUR, MIN_INNER_REP,
};
pub use tstat::{t_event_equivalence, t_statistic, transformed_level, verify_tstat, TstatVerdict};
