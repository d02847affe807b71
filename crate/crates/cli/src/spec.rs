use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::Path;

use selfnorm::applications::{RegressorLaw, MAX_EXACT_TOUR, MIN_INNER_REP};
use selfnorm::bounds::BoundKind;
use selfnorm::montecarlo::{DEFAULT_GAMMA, DEFAULT_P_MAX, MAX_ENUMERATION, MIN_REPLICATES};
use selfnorm::processes::{DifferenceModel, Family};

use crate::error::{CliError, CliResult, SpecIssue};

pub const DEFAULT_N_REP: u64 = 100_000;
pub const DEFAULT_INNER_REP: u64 = 2_000;
pub const DEFAULT_PILOT_REP: u64 = 10_000;
pub const DEFAULT_TSP_DIM: u32 = 2;
pub const DEFAULT_SEED: u64 = 1;
pub const SEED_ENV: &str = "SELFNORM_SEED";

/// What an experiment verifies: a catalog bound, or one of the
/// expectation-type and supermartingale checks without a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    Bound(BoundKind),
    /// inf over p of the expectation bound on P(S_n/B_n(y) ≥ x)
    Thm21Expectation,
    /// 2·inf over p of the regression expectation bound
    Thm32Regression,
    /// E[U_n(λ)] ≤ 1
    SupermartingaleU,
    /// E[V_n(λ)] ≤ 1
    SupermartingaleV,
}

const EXTRA_THEOREMS: [(Theorem, &str); 4] = [
    (Theorem::Thm21Expectation, "thm21_expectation"),
    (Theorem::Thm32Regression, "thm32_regression"),
    (Theorem::SupermartingaleU, "supermartingale_u"),
    (Theorem::SupermartingaleV, "supermartingale_v"),
];

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::Bound(k) => k.name(),
            other => EXTRA_THEOREMS.iter().find(|(t, _)| *t == other).expect("listed").1,
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        BoundKind::from_name(s)
            .map(Theorem::Bound)
            .or_else(|| EXTRA_THEOREMS.iter().find(|(_, n)| *n == s).map(|(t, _)| *t))
    }

    pub fn all_names() -> Vec<&'static str> {
        BoundKind::ALL
            .iter()
            .map(|k| k.name())
            .chain(EXTRA_THEOREMS.iter().map(|(_, n)| *n))
            .collect()
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Theorem {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Theorem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Theorem::from_name(&s).ok_or_else(|| {
            serde::de::Error::custom(format!("unknown theorem `{s}`, expected one of {}", Theorem::all_names().join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Mc,
    ExactOracle,
    Both,
}

impl Mode {
    pub fn mc(self) -> bool {
        matches!(self, Mode::Mc | Mode::Both)
    }

    pub fn exact(self) -> bool {
        matches!(self, Mode::ExactOracle | Mode::Both)
    }
}

/// Parameter grids. The experiment runs every combination of the grids its
/// theorem reads.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<f64>,
    #[serde(default, rename = "M", alias = "m", skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<f64>,
    #[serde(default, rename = "L", alias = "l", skip_serializing_if = "Vec::is_empty")]
    pub l: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p_max: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridName {
    X,
    Y,
    Z,
    B,
    M,
    Beta,
    T,
    Lambda,
    L,
    A,
    PMax,
}

const GRID_NAMES: [GridName; 11] = [
    GridName::X,
    GridName::Y,
    GridName::Z,
    GridName::B,
    GridName::M,
    GridName::Beta,
    GridName::T,
    GridName::Lambda,
    GridName::L,
    GridName::A,
    GridName::PMax,
];

impl GridName {
    pub fn key(self) -> &'static str {
        match self {
            GridName::X => "x",
            GridName::Y => "y",
            GridName::Z => "z",
            GridName::B => "b",
            GridName::M => "M",
            GridName::Beta => "beta",
            GridName::T => "t",
            GridName::Lambda => "lambda",
            GridName::L => "L",
            GridName::A => "a",
            GridName::PMax => "p_max",
        }
    }

    fn check(self, v: f64) -> Option<&'static str> {
        let ok = match self {
            GridName::X | GridName::Y | GridName::A => v >= 0.0 && v.is_finite(),
            GridName::Z | GridName::B | GridName::T | GridName::Lambda | GridName::L => v > 0.0 && v.is_finite(),
            GridName::M => v >= 1.0 && v.is_finite(),
            GridName::Beta => v > 1.0 && v < 2.0,
            GridName::PMax => v > 1.001 && v.is_finite(),
        };
        if ok {
            return None;
        }
        Some(match self {
            GridName::X | GridName::Y | GridName::A => "must be finite and >= 0",
            GridName::Z | GridName::B | GridName::T | GridName::Lambda | GridName::L => "must be finite and > 0",
            GridName::M => "must be finite and >= 1",
            GridName::Beta => "must lie in the open interval (1, 2)",
            GridName::PMax => "must be finite and > 1.001",
        })
    }
}

impl Grids {
    pub fn get(&self, g: GridName) -> &Vec<f64> {
        match g {
            GridName::X => &self.x,
            GridName::Y => &self.y,
            GridName::Z => &self.z,
            GridName::B => &self.b,
            GridName::M => &self.m,
            GridName::Beta => &self.beta,
            GridName::T => &self.t,
            GridName::Lambda => &self.lambda,
            GridName::L => &self.l,
            GridName::A => &self.a,
            GridName::PMax => &self.p_max,
        }
    }

    fn get_mut(&mut self, g: GridName) -> &mut Vec<f64> {
        match g {
            GridName::X => &mut self.x,
            GridName::Y => &mut self.y,
            GridName::Z => &mut self.z,
            GridName::B => &mut self.b,
            GridName::M => &mut self.m,
            GridName::Beta => &mut self.beta,
            GridName::T => &mut self.t,
            GridName::Lambda => &mut self.lambda,
            GridName::L => &mut self.l,
            GridName::A => &mut self.a,
            GridName::PMax => &mut self.p_max,
        }
    }
}

/// Model hypothesis a theorem needs before its bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Hypothesis {
    SquareIntegrable,
    BoundedAbove,
    Bounded,
    HeavyOnLeft,
    Symmetric,
    BetaMoment,
}

struct Requirements {
    required: &'static [GridName],
    optional: &'static [(GridName, f64)],
    /// needs a window base from the `b` grid or `b_quantile`
    window: bool,
    hypotheses: &'static [Hypothesis],
    exact: bool,
}

fn requirements(t: Theorem) -> Option<Requirements> {
    use GridName::*;
    use Hypothesis::*;
    let r = |required, optional, window, hypotheses, exact| {
        Some(Requirements { required, optional, window, hypotheses, exact })
    };
    match t {
        Theorem::Bound(k) => match k {
            BoundKind::Bernstein => r(&[Z], &[], false, &[Bounded], true),
            BoundKind::Freedman => r(&[X, L], &[], false, &[BoundedAbove], true),
            BoundKind::Dvz => r(&[X, L, A], &[], false, &[SquareIntegrable], true),
            BoundKind::DlpPoint => r(&[X, Y], &[], false, &[Symmetric], true),
            BoundKind::BercuTouati => r(&[X, A, B, Y], &[], false, &[HeavyOnLeft], true),
            BoundKind::Thm21Point => r(&[X, Z], &[(Y, 0.0)], false, &[SquareIntegrable], true),
            BoundKind::Thm22Peeling => r(&[X, M], &[(Y, 0.0)], true, &[SquareIntegrable], true),
            BoundKind::Cor22Peeling => r(&[X, M], &[], true, &[SquareIntegrable], true),
            BoundKind::Thm25Peeling => r(&[X, M], &[], true, &[HeavyOnLeft], true),
            BoundKind::Delyon => r(&[X, Y], &[], false, &[SquareIntegrable], true),
            BoundKind::Thm23Exponent => r(&[X, Beta], &[(PMax, DEFAULT_P_MAX)], false, &[BetaMoment], true),
            BoundKind::Thm24Peeling | BoundKind::Thm24PeelingConservative => {
                r(&[X, Beta, M], &[], true, &[BetaMoment], true)
            }
            BoundKind::Thm31Tstat => r(&[X, M], &[], true, &[HeavyOnLeft], false),
            BoundKind::Thm33Regression => r(&[X, M], &[], true, &[BoundedAbove], true),
            BoundKind::Thm34Tsp => r(&[T], &[], false, &[], false),
            BoundKind::DlpPang | BoundKind::AzumaTsp => None,
        },
        Theorem::Thm21Expectation => r(&[X], &[(Y, 0.0), (PMax, DEFAULT_P_MAX)], false, &[SquareIntegrable], true),
        Theorem::Thm32Regression => r(&[X], &[], false, &[BoundedAbove], true),
        Theorem::SupermartingaleU => r(&[Lambda], &[(Y, 0.0)], false, &[SquareIntegrable], true),
        Theorem::SupermartingaleV => r(&[Lambda, Beta], &[], false, &[BetaMoment], true),
    }
}

/// Regressor law and true coefficient of a regression experiment. The noise
/// law is the experiment's `model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSection {
    pub theta: f64,
    pub phi: RegressorLaw,
}

fn default_n_rep() -> u64 {
    DEFAULT_N_REP
}
fn default_inner_rep() -> u64 {
    DEFAULT_INNER_REP
}
fn default_pilot_rep() -> u64 {
    DEFAULT_PILOT_REP
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_d() -> u32 {
    DEFAULT_TSP_DIM
}

/// One verification experiment, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: String,
    pub theorem: Theorem,
    pub model: DifferenceModel,
    pub n: usize,
    pub grids: Grids,
    /// Window base b as a quantile level of the window statistic, estimated
    /// from a pilot sample; alternative to the `b` grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_quantile: Option<f64>,
    #[serde(default = "default_n_rep")]
    pub n_rep: u64,
    #[serde(default = "default_inner_rep")]
    pub inner_rep: u64,
    #[serde(default = "default_pilot_rep")]
    pub pilot_rep: u64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionSection>,
    /// TSP dimension.
    #[serde(default = "default_d")]
    pub d: u32,
    /// TSP window constant; calibrated from the instances when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

/// Overrides applied on top of a loaded spec.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub env_seed: Option<u64>,
}

impl Overrides {
    /// Reads the fallback seed from `SELFNORM_SEED`.
    pub fn with_env(mut self) -> Result<Self, SpecIssue> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .map_err(|_| SpecIssue::new(SEED_ENV, format!("must be an unsigned 64-bit integer, got `{v}`")))?;
            self.env_seed = Some(seed);
        }
        Ok(self)
    }
}

fn noise_scale(model: &DifferenceModel) -> Option<f64> {
    match model.family() {
        Family::Rademacher => Some(1.0),
        Family::ScaledTwoPoint { p_up, up, down } if *p_up == 0.5 && *up == -*down => Some(*up),
        _ => None,
    }
}

impl ExperimentSpec {
    /// Seed precedence: `--seed`, then the spec's `master_seed`, then
    /// `SELFNORM_SEED`, then 1.
    pub fn resolve(mut self, ov: Overrides) -> CliResult<Self> {
        self.master_seed = Some(ov.seed.or(self.master_seed).or(ov.env_seed).unwrap_or(DEFAULT_SEED));
        if let Some(r) = ov.reps {
            self.n_rep = r;
        }
        if let Some(req) = requirements(self.theorem) {
            for &(g, default) in req.optional {
                if self.grids.get(g).is_empty() {
                    self.grids.get_mut(g).push(default);
                }
            }
        }
        let issues = self.issues();
        if issues.is_empty() {
            Ok(self)
        } else {
            Err(CliError::Invalid(issues))
        }
    }

    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn is_tsp(&self) -> bool {
        self.theorem == Theorem::Bound(BoundKind::Thm34Tsp)
    }

    pub fn is_regression(&self) -> bool {
        matches!(self.theorem, Theorem::Thm32Regression | Theorem::Bound(BoundKind::Thm33Regression))
    }

    /// Every validation failure, in field order.
    pub fn issues(&self) -> Vec<SpecIssue> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push(SpecIssue::new("id", "must be nonempty"));
        }
        let Some(req) = requirements(self.theorem) else {
            out.push(SpecIssue::new(
                "theorem",
                format!("{} is a calculator only; evaluate it with `selfnorm bounds eval`", self.theorem),
            ));
            return out;
        };
        let min_n = if self.is_tsp() || self.theorem == Theorem::Bound(BoundKind::Thm31Tstat) { 2 } else { 1 };
        if self.n < min_n {
            out.push(SpecIssue::new("n", format!("must be >= {min_n}, got {}", self.n)));
        }
        if self.is_tsp() {
            if self.n > MAX_EXACT_TOUR {
                out.push(SpecIssue::new("n", format!("TSP verification needs n <= {MAX_EXACT_TOUR}, got {}", self.n)));
            }
            if self.n_rep < 1 {
                out.push(SpecIssue::new("n_rep", "TSP instance count must be >= 1"));
            }
            if self.inner_rep < MIN_INNER_REP {
                out.push(SpecIssue::new("inner_rep", format!("must be >= {MIN_INNER_REP}, got {}", self.inner_rep)));
            }
            if self.d < 2 {
                out.push(SpecIssue::new("d", format!("must be >= 2, got {}", self.d)));
            }
            if let Some(c1) = self.c1 {
                if !(c1 > 0.0 && c1.is_finite()) {
                    out.push(SpecIssue::new("c1", format!("must be finite and > 0, got {c1}")));
                }
            }
        } else if self.mode.mc() && self.n_rep < MIN_REPLICATES {
            out.push(SpecIssue::new("n_rep", format!("must be >= {MIN_REPLICATES}, got {}", self.n_rep)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            out.push(SpecIssue::new("gamma", format!("must lie in the open interval (0, 1), got {}", self.gamma)));
        }
        if req.window && self.pilot_rep == 0 {
            out.push(SpecIssue::new("pilot_rep", "must be >= 1"));
        }

        for g in GRID_NAMES {
            let vals = self.grids.get(g);
            let key = format!("grids.{}", g.key());
            let used = req.required.contains(&g)
                || req.optional.iter().any(|(o, _)| *o == g)
                || (req.window && g == GridName::B);
            if !used {
                if !vals.is_empty() {
                    out.push(SpecIssue::new(key, format!("is not read by {}", self.theorem)));
                }
                continue;
            }
            if req.required.contains(&g) && vals.is_empty() {
                out.push(SpecIssue::new(key.clone(), "must be a nonempty list"));
            }
            for (i, &v) in vals.iter().enumerate() {
                if let Some(reason) = g.check(v) {
                    out.push(SpecIssue::new(format!("{key}[{i}]"), format!("{reason}, got {v}")));
                }
            }
        }
        if req.window {
            match (self.grids.b.is_empty(), self.b_quantile) {
                (true, None) => out.push(SpecIssue::new("grids.b", "give a b grid or b_quantile")),
                (false, Some(_)) => out.push(SpecIssue::new("b_quantile", "conflicts with a nonempty b grid")),
                (_, Some(q)) if !(q > 0.0 && q < 1.0) => {
                    out.push(SpecIssue::new("b_quantile", format!("must lie in the open interval (0, 1), got {q}")))
                }
                _ => {}
            }
        } else if self.b_quantile.is_some() {
            out.push(SpecIssue::new("b_quantile", format!("is not read by {}", self.theorem)));
        }

        let pre = self.model.preconditions();
        for h in req.hypotheses {
            let ok = match h {
                Hypothesis::SquareIntegrable => pre.square_integrable,
                Hypothesis::BoundedAbove => pre.bounded_above.is_some(),
                Hypothesis::Bounded => pre.bounded.is_some(),
                Hypothesis::HeavyOnLeft => pre.heavy_on_left,
                Hypothesis::Symmetric => pre.conditionally_symmetric,
                Hypothesis::BetaMoment => self.grids.beta.iter().all(|&b| pre.moment_order > b),
            };
            if !ok {
                let what = match h {
                    Hypothesis::SquareIntegrable => "square-integrable differences",
                    Hypothesis::BoundedAbove => "differences bounded above",
                    Hypothesis::Bounded => "bounded differences",
                    Hypothesis::HeavyOnLeft => "differences heavy on left",
                    Hypothesis::Symmetric => "conditionally symmetric differences",
                    Hypothesis::BetaMoment => "a finite moment of every order in grids.beta",
                };
                out.push(SpecIssue::new("model", format!("{} assumes {what}", self.theorem)));
            }
        }

        match (&self.regression, self.is_regression()) {
            (None, true) => out.push(SpecIssue::new("regression", format!("{} needs a regression section", self.theorem))),
            (Some(_), false) => out.push(SpecIssue::new("regression", format!("is not read by {}", self.theorem))),
            _ => {}
        }

        if self.mode.exact() {
            if !req.exact {
                out.push(SpecIssue::new("mode", format!("{} has no exact oracle", self.theorem)));
            } else if self.n > MAX_ENUMERATION {
                out.push(SpecIssue::new(
                    "mode",
                    format!("exact enumeration needs n <= {MAX_ENUMERATION}, got {}", self.n),
                ));
            }
            if self.is_regression() {
                if noise_scale(&self.model).is_none() {
                    out.push(SpecIssue::new("model", "exact regression needs symmetric two-point noise"));
                }
                if let Some(r) = &self.regression {
                    if r.phi != (RegressorLaw::Constant { value: 1.0 }) {
                        out.push(SpecIssue::new("regression.phi", "exact regression needs phi = constant 1"));
                    }
                }
            } else if req.exact && !self.model.is_rademacher() {
                out.push(SpecIssue::new("model", "exact enumeration needs the rademacher family"));
            }
        }
        out
    }

    /// Scale s of the ±s noise for the exact regression oracle.
    pub fn noise_scale(&self) -> Option<f64> {
        noise_scale(&self.model)
    }
}

/// Parse and validate a spec file.
pub fn load_spec(path: &Path, ov: Overrides) -> CliResult<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_spec(&text, path, ov)
}

pub fn parse_spec(text: &str, path: &Path, ov: Overrides) -> CliResult<ExperimentSpec> {
    let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec.resolve(ov)
}
