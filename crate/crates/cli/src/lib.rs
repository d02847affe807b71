//! Experiment specs, orchestration and report output for the `selfnorm`
//! command-line tool.

pub mod calc;
pub mod error;
pub mod record;
pub mod run;
pub mod spec;

pub use calc::parse_bound_args;
pub use error::{CliError, CliResult, SpecIssue};
pub use record::{emit_report, load_report, render, sort_records, Format, GridPoint, Report, ResultRecord};
pub use run::{run_experiment, RunOptions};
pub use spec::{load_spec, parse_spec, ExperimentSpec, Grids, Mode, Overrides, Theorem};
