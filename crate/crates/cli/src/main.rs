use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use selfnorm::bounds::clamp_probability;
use selfnorm::exec::with_jobs;
use selfnorm_cli::record::write_plot_data;
use selfnorm_cli::{
    emit_report, load_report, load_spec, parse_bound_args, run_experiment, CliError, CliResult, Format, Mode,
    Overrides, Report, RunOptions, SpecIssue,
};

const SPEC_DEFAULTS: &str = "\
Spec defaults (echoed into every report):
  n_rep       100000   Monte Carlo replicates (TSP: number of instances)
  inner_rep   2000     TSP inner resamples per level
  pilot_rep   10000    pilot paths for b_quantile
  gamma       0.99     confidence level of the Clopper-Pearson interval
  mode        mc       one of mc, exact_oracle, both
  d           2        TSP dimension
  grids.y     0        where the theorem reads y
  grids.p_max 51       upper end of the p search for expectation bounds
  master_seed          --seed, else the spec, else SELFNORM_SEED, else 1

Exit status: 0 all checks pass or are vacuous, 1 violation evidence, 2 error.";

#[derive(Parser)]
#[command(name = "selfnorm", version, about = "Bounds for self-normalized martingales and their Monte Carlo verification", after_help = SPEC_DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bound calculators.
    Bounds {
        #[command(subcommand)]
        command: BoundsCommand,
    },
    /// Run an experiment spec.
    #[command(after_help = SPEC_DEFAULTS)]
    Verify(RunArgs),
    /// Run an experiment spec by exact enumeration only.
    #[command(after_help = SPEC_DEFAULTS)]
    Oracle(RunArgs),
    /// Convert a JSON report to another format.
    Report {
        /// JSON report written by `verify` or `oracle`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Evaluate one bound, e.g. `bounds eval freedman x=2 L=1 a=1`.
    Eval {
        kind: String,
        /// Parameters as key=value: x y z b M beta n sigma t d a L q c.
        params: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Master seed; overrides the spec and SELFNORM_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count; overrides the spec's n_rep.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write <out>.plot.csv with (theorem, x, p_hat, ci_hi, bound).
    #[arg(long, requires = "out")]
    emit_plot_data: bool,
    /// Worker threads; the results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Record wall time per record (makes reports differ between runs).
    #[arg(long)]
    timing: bool,
}

fn plot_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".plot.csv");
    PathBuf::from(name)
}

fn run(args: RunArgs, force_exact: bool) -> CliResult<bool> {
    let env = Overrides::default()
        .with_env()
        .map_err(|issue| CliError::Invalid(vec![issue]))?;
    let ov = Overrides { seed: args.seed, reps: args.reps, ..env };
    let mut spec = load_spec(&args.spec, ov)?;
    if force_exact {
        spec.mode = Mode::ExactOracle;
        let issues = spec.issues();
        if !issues.is_empty() {
            return Err(CliError::Invalid(issues));
        }
    }
    if args.jobs == Some(0) {
        return Err(CliError::Invalid(vec![SpecIssue::new("--jobs", "must be >= 1")]));
    }
    let opts = RunOptions { timing: args.timing };
    let records = with_jobs(args.jobs, || run_experiment(&spec, opts))?;
    let report = Report { spec, records };
    emit_report(&report, args.format.into(), args.out.as_deref())?;
    if args.emit_plot_data {
        let out = args.out.as_deref().expect("clap requires --out");
        let path = plot_path(out);
        let file = std::fs::File::create(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        write_plot_data(&report.records, file)?;
    }
    Ok(report.has_violation())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds { command: BoundsCommand::Eval { kind, params } } => {
            parse_bound_args(&kind, &params).and_then(|spec| {
                let value = spec.evaluate().map_err(|e| CliError::Invalid(vec![SpecIssue::new("params", e.to_string())]))?;
                let out = serde_json::json!({
                    "kind": spec.kind,
                    "params": spec.params,
                    "value": value,
                    "probability": spec.kind.is_probability().then(|| clamp_probability(value)),
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
                Ok(false)
            })
        }
        Command::Verify(args) => run(args, false),
        Command::Oracle(args) => run(args, true),
        Command::Report { input, format, out } => {
            load_report(&input).and_then(|r| emit_report(&r, format.into(), out.as_deref()).map(|_| r.has_violation()))
        }
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
