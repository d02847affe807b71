use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use selfnorm::montecarlo::VerdictStatus;

use crate::error::{CliError, CliResult};
use crate::spec::ExperimentSpec;

/// Parameter values of one record. TSP levels t and supermartingale λ have
/// their own fields but share the `x` column in CSV output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
}

impl GridPoint {
    fn fields(&self) -> [Option<f64>; 11] {
        [
            self.x, self.y, self.z, self.b, self.m, self.beta, self.t, self.lambda, self.l, self.a, self.p_max,
        ]
    }

    /// Lexicographic order over the fields, absent before present.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.fields().iter().zip(other.fields().iter()) {
            let ord = match (a, b) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(a), Some(b)) => a.total_cmp(b),
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    }

    /// The deviation level shown in the `x` column.
    pub fn level(&self) -> Option<f64> {
        self.x.or(self.t).or(self.lambda)
    }
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names = ["x", "y", "z", "b", "M", "beta", "t", "lambda", "L", "a", "p_max"];
        let parts: Vec<String> = names
            .iter()
            .zip(self.fields())
            .filter_map(|(n, v)| v.map(|v| format!("{n}={v}")))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub theorem: String,
    /// Distinguishes several checks of one theorem at the same grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub point: GridPoint,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rep: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_hi: Option<f64>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    pub status: VerdictStatus,
    pub seed: u64,
    /// Only filled when timing is requested, so reports stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl ResultRecord {
    pub fn label(&self) -> String {
        match &self.variant {
            Some(v) => format!("{}:{}", self.theorem, v),
            None => self.theorem.clone(),
        }
    }
}

/// Records in canonical order: by variant, then grid point.
pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| a.variant.cmp(&b.variant).then_with(|| a.point.canonical_cmp(&b.point)));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub records: Vec<ResultRecord>,
}

impl Report {
    pub fn has_violation(&self) -> bool {
        self.records.iter().any(|r| r.status == VerdictStatus::ViolationEvidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "experiment_id",
    "theorem",
    "x",
    "y",
    "z",
    "b",
    "M",
    "beta",
    "bound",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "exact",
    "status",
    "seed",
    "wall_ms",
];

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output(format!("csv: {e}"))
}

pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in records {
        let p = &r.point;
        w.write_record([
            r.experiment_id.clone(),
            r.label(),
            opt(p.level()),
            opt(p.y),
            opt(p.z),
            opt(p.b),
            opt(p.m),
            opt(p.beta),
            fmt_num(r.bound),
            opt(r.p_hat),
            opt(r.ci_lo),
            opt(r.ci_hi),
            opt(r.exact),
            r.status.name().to_string(),
            r.seed.to_string(),
            opt(r.wall_ms),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

/// (x, p_hat, ci_hi, bound) per record, labelled by theorem and variant.
pub fn write_plot_data<W: Write>(records: &[ResultRecord], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theorem", "x", "p_hat", "ci_hi", "bound"]).map_err(csv_error)?;
    for r in records {
        w.write_record([r.label(), opt(r.point.level()), opt(r.p_hat.or(r.exact)), opt(r.ci_hi), fmt_num(r.bound)])
            .map_err(csv_error)?;
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

pub fn render(report: &Report, format: Format) -> CliResult<Vec<u8>> {
    if report.records.is_empty() {
        return Err(CliError::Output("report has no records".into()));
    }
    match format {
        Format::Json => {
            let mut buf = serde_json::to_vec_pretty(report).map_err(|e| CliError::Output(e.to_string()))?;
            buf.push(b'\n');
            Ok(buf)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&report.records, &mut buf)?;
            Ok(buf)
        }
    }
}

/// Write a report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> CliResult<()> {
    let bytes = render(report, format)?;
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Io { path: p.into(), source }),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

pub fn load_report(path: &Path) -> CliResult<Report> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}
