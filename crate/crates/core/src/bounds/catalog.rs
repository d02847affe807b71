//! Closed-form right-hand sides of the classical and self-normalized
//! exponential inequalities.

use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use super::rate::{beta_rate, psi};
use crate::error::{Error, FieldError, Result};

/// Parameters shared by the bound calculators. Each kind reads a subset;
/// unread fields may be left `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateInputs {
    /// Deviation level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Truncation level, or the lower bound on the normalizer in the
    /// point inequalities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    /// Normalizer cap in the point bound of the mixed-bracket theorem; the
    /// deviation level in Bernstein's inequality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Peeling base scale (also the slope in Bercu–Touati's a + b[S]_n).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Peeling range ratio.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// TSP deviation level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// TSP dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    /// Bound on |ξ_i| (classical inequalities) or intercept a in a + b[S]_n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Variance level: the cap L on ⟨S⟩_n or H_n^a, or var(S_n) for Bernstein.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    /// Hölder exponent of the de la Peña–Pang bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Azuma constant C.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Bernstein,
    Freedman,
    Dvz,
    DlpPoint,
    DlpPang,
    BercuTouati,
    Thm21Point,
    Thm22Peeling,
    Cor22Peeling,
    Thm25Peeling,
    Delyon,
    Thm23Exponent,
    Thm24Peeling,
    Thm24PeelingConservative,
    Thm31Tstat,
    Thm33Regression,
    Thm34Tsp,
    AzumaTsp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    X,
    Y,
    Z,
    B,
    M,
    Beta,
    N,
    Sigma,
    T,
    D,
    A,
    L,
    Q,
    C,
}

impl Field {
    fn name(self) -> &'static str {
        match self {
            Field::X => "x",
            Field::Y => "y",
            Field::Z => "z",
            Field::B => "b",
            Field::M => "m",
            Field::Beta => "beta",
            Field::N => "n",
            Field::Sigma => "sigma",
            Field::T => "t",
            Field::D => "d",
            Field::A => "a",
            Field::L => "l",
            Field::Q => "q",
            Field::C => "c",
        }
    }
}

impl BoundKind {
    pub const ALL: [BoundKind; 18] = [
        BoundKind::Bernstein,
        BoundKind::Freedman,
        BoundKind::Dvz,
        BoundKind::DlpPoint,
        BoundKind::DlpPang,
        BoundKind::BercuTouati,
        BoundKind::Thm21Point,
        BoundKind::Thm22Peeling,
        BoundKind::Cor22Peeling,
        BoundKind::Thm25Peeling,
        BoundKind::Delyon,
        BoundKind::Thm23Exponent,
        BoundKind::Thm24Peeling,
        BoundKind::Thm24PeelingConservative,
        BoundKind::Thm31Tstat,
        BoundKind::Thm33Regression,
        BoundKind::Thm34Tsp,
        BoundKind::AzumaTsp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Bernstein => "bernstein",
            BoundKind::Freedman => "freedman",
            BoundKind::Dvz => "dvz",
            BoundKind::DlpPoint => "dlp_point",
            BoundKind::DlpPang => "dlp_pang",
            BoundKind::BercuTouati => "bercu_touati",
            BoundKind::Thm21Point => "thm21_point",
            BoundKind::Thm22Peeling => "thm22_peeling",
            BoundKind::Cor22Peeling => "cor22_peeling",
            BoundKind::Thm25Peeling => "thm25_peeling",
            BoundKind::Delyon => "delyon",
            BoundKind::Thm23Exponent => "thm23_exponent",
            BoundKind::Thm24Peeling => "thm24_peeling",
            BoundKind::Thm24PeelingConservative => "thm24_peeling_conservative",
            BoundKind::Thm31Tstat => "thm31_tstat",
            BoundKind::Thm33Regression => "thm33_regression",
            BoundKind::Thm34Tsp => "thm34_tsp",
            BoundKind::AzumaTsp => "azuma_tsp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn required(self) -> &'static [Field] {
        use Field::*;
        match self {
            BoundKind::Bernstein => &[Z, L, A],
            BoundKind::Freedman | BoundKind::Dvz => &[X, L, A],
            BoundKind::DlpPoint | BoundKind::Delyon => &[X, Y],
            BoundKind::DlpPang => &[X, Q],
            BoundKind::BercuTouati => &[X, A, B, Y],
            BoundKind::Thm21Point => &[X, Y, Z],
            BoundKind::Thm22Peeling => &[X, Y, B, M],
            BoundKind::Cor22Peeling | BoundKind::Thm25Peeling => &[X, M],
            BoundKind::Thm23Exponent => &[X, Beta],
            BoundKind::Thm24Peeling | BoundKind::Thm24PeelingConservative => &[X, Beta, M],
            BoundKind::Thm31Tstat => &[X, N, M],
            BoundKind::Thm33Regression => &[X, Sigma, Y, B, M],
            BoundKind::Thm34Tsp => &[T, N, D],
            BoundKind::AzumaTsp => &[T, N, D, C],
        }
    }

    /// True for kinds whose value is a probability bound (everything except
    /// the β-rate coefficient).
    pub fn is_probability(self) -> bool {
        self != BoundKind::Thm23Exponent
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_field(field: Field, inputs: &RateInputs) -> Option<String> {
    let real = |v: Option<f64>, ok: fn(f64) -> bool, msg: &str| -> Option<String> {
        match v {
            Some(v) if v.is_nan() || !ok(v) => Some(format!("{msg}, got {v}")),
            _ => None,
        }
    };
    match field {
        Field::X => real(inputs.x, |v| v >= 0.0, "must be >= 0"),
        Field::Y => real(inputs.y, |v| v >= 0.0, "must be >= 0"),
        Field::Z => real(inputs.z, |v| v > 0.0, "must be > 0"),
        Field::B => real(inputs.b, |v| v > 0.0, "must be > 0"),
        Field::M => real(inputs.m, |v| v >= 1.0 && v.is_finite(), "must be finite and >= 1"),
        Field::Beta => real(inputs.beta, |v| v > 1.0 && v < 2.0, "must lie in the open interval (1, 2)"),
        Field::Sigma => real(inputs.sigma, |v| v > 0.0, "must be > 0"),
        Field::T => real(inputs.t, |v| v > 0.0, "must be > 0"),
        Field::A => real(inputs.a, |v| v >= 0.0, "must be >= 0"),
        Field::L => real(inputs.l, |v| v > 0.0, "must be > 0"),
        Field::Q => real(inputs.q, |v| v >= 1.0, "must be >= 1"),
        Field::C => real(inputs.c, |v| v > 0.0, "must be > 0"),
        Field::N => match inputs.n {
            Some(0) => Some("must be a positive integer, got 0".into()),
            _ => None,
        },
        Field::D => match inputs.d {
            Some(d) if d < 2 => Some(format!("must be an integer >= 2, got {d}")),
            _ => None,
        },
    }
}

fn is_present(field: Field, p: &RateInputs) -> bool {
    match field {
        Field::X => p.x.is_some(),
        Field::Y => p.y.is_some(),
        Field::Z => p.z.is_some(),
        Field::B => p.b.is_some(),
        Field::M => p.m.is_some(),
        Field::Beta => p.beta.is_some(),
        Field::N => p.n.is_some(),
        Field::Sigma => p.sigma.is_some(),
        Field::T => p.t.is_some(),
        Field::D => p.d.is_some(),
        Field::A => p.a.is_some(),
        Field::L => p.l.is_some(),
        Field::Q => p.q.is_some(),
        Field::C => p.c.is_some(),
    }
}

const ALL_FIELDS: [Field; 14] = [
    Field::X,
    Field::Y,
    Field::Z,
    Field::B,
    Field::M,
    Field::Beta,
    Field::N,
    Field::Sigma,
    Field::T,
    Field::D,
    Field::A,
    Field::L,
    Field::Q,
    Field::C,
];

/// One inequality together with validated parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub params: RateInputs,
}

impl BoundSpec {
    /// Validates every present field and checks that `kind` has what it reads.
    /// All problems are reported together.
    pub fn new(kind: BoundKind, params: RateInputs) -> Result<Self> {
        let mut errors = Vec::new();
        for f in ALL_FIELDS {
            if let Some(reason) = check_field(f, &params) {
                errors.push(FieldError { field: f.name(), reason });
            }
        }
        for &f in kind.required() {
            if !is_present(f, &params) {
                errors.push(FieldError {
                    field: f.name(),
                    reason: format!("required by {}", kind.name()),
                });
            }
        }
        match kind {
            BoundKind::DlpPang if params.x == Some(0.0) => errors.push(FieldError {
                field: "x",
                reason: "must be > 0 for dlp_pang".into(),
            }),
            BoundKind::Thm31Tstat => {
                if let (Some(x), Some(n)) = (params.x, params.n) {
                    if n as f64 + x * x - 1.0 <= 0.0 {
                        errors.push(FieldError {
                            field: "x",
                            reason: "n + x^2 - 1 must be > 0".into(),
                        });
                    }
                }
            }
            BoundKind::AzumaTsp | BoundKind::Thm34Tsp if params.n.is_some_and(|n| n < 2) => {
                errors.push(FieldError {
                    field: "n",
                    reason: "must be >= 2 for the TSP bounds".into(),
                })
            }
            _ => {}
        }
        if errors.is_empty() {
            Ok(BoundSpec { kind, params })
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn evaluate(&self) -> Result<f64> {
        evaluate_bound(self)
    }
}

/// Number of peeling slices bounded by 1 + 2(1+x)ln M.
fn peeling_factor(x: f64, m: f64) -> f64 {
    1.0 + 2.0 * (1.0 + x) * m.ln()
}

/// Closed-form right-hand side of the inequality named by `spec.kind`.
/// Values above one are returned unclamped; see [`clamp_probability`].
pub fn evaluate_bound(spec: &BoundSpec) -> Result<f64> {
    // Re-validate: the fields are public and may have been edited.
    let spec = BoundSpec::new(spec.kind, spec.params.clone())?;
    let p = &spec.params;
    let get = |v: Option<f64>| v.expect("validated");
    let sqrt_e = E.sqrt();
    let value = match spec.kind {
        BoundKind::Bernstein => {
            let (z, var, a) = (get(p.z), get(p.l), get(p.a));
            (-z * z / (2.0 * (var + a * z / 3.0))).exp()
        }
        BoundKind::Freedman => {
            let (x, l, a) = (get(p.x), get(p.l), get(p.a));
            (-x * x / (2.0 * (l + a * x / 3.0))).exp()
        }
        BoundKind::Dvz => {
            let (x, l, a) = (get(p.x), get(p.l), get(p.a));
            (-(x * x / (2.0 * l)) * psi(a * x / l)?).exp()
        }
        BoundKind::DlpPoint => {
            let (x, y) = (get(p.x), get(p.y));
            (-x * x * y / 2.0).exp()
        }
        BoundKind::DlpPang => {
            let (x, q) = (get(p.x), get(p.q));
            let e = q / (2.0 * q - 1.0);
            (q / (2.0 * q - 1.0)).powf(e) * x.powf(-e) * (-x * x / 2.0).exp()
        }
        BoundKind::BercuTouati => {
            let (x, a, b, y) = (get(p.x), get(p.a), get(p.b), get(p.y));
            (-x * x * (a * b + b * b * y / 2.0)).exp()
        }
        BoundKind::Thm21Point => {
            let (x, y, z) = (get(p.x), get(p.y), get(p.z));
            (-x * x * z / (2.0 * (1.0 + x * y / 3.0))).exp()
        }
        BoundKind::Thm22Peeling => {
            let (x, y, b, m) = (get(p.x), get(p.y), get(p.b), get(p.m));
            sqrt_e * peeling_factor(x, m) * (-x * x / (2.0 * (1.0 + x * y / (3.0 * b)))).exp()
        }
        BoundKind::Cor22Peeling | BoundKind::Thm25Peeling => {
            let (x, m) = (get(p.x), get(p.m));
            sqrt_e * peeling_factor(x, m) * (-x * x / 2.0).exp()
        }
        BoundKind::Delyon => {
            let (x, y) = (get(p.x), get(p.y));
            if y == 0.0 {
                // P(S_n >= x, B_n(0) <= 0): B_n(0) = 0 forces S_n <= 0.
                if x > 0.0 { 0.0 } else { 1.0 }
            } else {
                (-x * x / (2.0 * y)).exp()
            }
        }
        BoundKind::Thm23Exponent => beta_rate(get(p.x), get(p.beta))?,
        BoundKind::Thm24Peeling => {
            let (x, beta, m) = (get(p.x), get(p.beta), get(p.m));
            peeling_factor(x, m) * (-beta_rate(x, beta)? / beta).exp()
        }
        BoundKind::Thm24PeelingConservative => {
            let (x, beta, m) = (get(p.x), get(p.beta), get(p.m));
            let a = 1.0 + (beta - 1.0) / (1.0 + x);
            let slices = 1.0 + (m.ln() / a.ln()).ceil();
            slices * (-beta_rate(x, beta)? / beta).exp()
        }
        BoundKind::Thm31Tstat => {
            let (x, n, m) = (get(p.x), p.n.expect("validated") as f64, get(p.m));
            let denom = n + x * x - 1.0;
            let shifted = x * (n / denom).sqrt();
            sqrt_e * (1.0 + 2.0 * (1.0 + shifted) * m.ln()) * (-n * x * x / (2.0 * denom)).exp()
        }
        BoundKind::Thm33Regression => {
            let (x, sigma, y, b, m) = (get(p.x), get(p.sigma), get(p.y), get(p.b), get(p.m));
            2.0 * sqrt_e
                * (1.0 + 2.0 * (1.0 + x / sigma) * m.ln())
                * (-x * x / (2.0 * (sigma * sigma + x * y / (3.0 * b)))).exp()
        }
        BoundKind::Thm34Tsp => {
            let (t, n, d) = (get(p.t), p.n.expect("validated") as f64, p.d.expect("validated") as f64);
            sqrt_e * (1.0 + (2.0 / d) * (1.0 + t) * n.ln()) * (-t * t / 2.0).exp()
        }
        BoundKind::AzumaTsp => {
            let (t, n, d, c) = (get(p.t), p.n.expect("validated") as f64, p.d.expect("validated"), get(p.c));
            let scale = if d == 2 {
                n.ln()
            } else {
                n.powf((d as f64 - 2.0) / d as f64)
            };
            (-t * t / (c * scale)).exp()
        }
    };
    Ok(value)
}

/// min(bound, 1), for reporting.
pub fn clamp_probability(bound: f64) -> f64 {
    bound.min(1.0)
}
