use selfnorm::bounds::{BoundKind, BoundSpec, RateInputs};

use crate::error::{CliError, CliResult, SpecIssue};

const INTEGER_KEYS: [&str; 2] = ["n", "d"];
const REAL_KEYS: [&str; 12] = ["x", "y", "z", "b", "M", "beta", "sigma", "t", "a", "L", "q", "c"];

/// Build a bound spec from `key=value` arguments. `M` and `L` may also be
/// written in lower case.
pub fn parse_bound_args(kind: &str, args: &[String]) -> CliResult<BoundSpec> {
    let mut issues = Vec::new();
    let kind = BoundKind::from_name(kind);
    if kind.is_none() {
        let names: Vec<_> = BoundKind::ALL.iter().map(|k| k.name()).collect();
        issues.push(SpecIssue::new("kind", format!("expected one of {}", names.join(", "))));
    }
    let mut params = RateInputs::default();
    for arg in args {
        let Some((key, value)) = arg.split_once('=') else {
            issues.push(SpecIssue::new(arg.as_str(), "expected key=value"));
            continue;
        };
        let key = match key {
            "m" => "M",
            "l" => "L",
            k => k,
        };
        if INTEGER_KEYS.contains(&key) {
            match value.parse::<u64>() {
                Ok(v) if key == "n" => params.n = Some(v),
                Ok(v) => match u32::try_from(v) {
                    Ok(d) => params.d = Some(d),
                    Err(_) => issues.push(SpecIssue::new(key, "out of range")),
                },
                Err(_) => issues.push(SpecIssue::new(key, format!("expected a nonnegative integer, got `{value}`"))),
            }
            continue;
        }
        if !REAL_KEYS.contains(&key) {
            issues.push(SpecIssue::new(key, "unknown parameter"));
            continue;
        }
        let Ok(v) = value.parse::<f64>() else {
            issues.push(SpecIssue::new(key, format!("expected a number, got `{value}`")));
            continue;
        };
        let slot = match key {
            "x" => &mut params.x,
            "y" => &mut params.y,
            "z" => &mut params.z,
            "b" => &mut params.b,
            "M" => &mut params.m,
            "beta" => &mut params.beta,
            "sigma" => &mut params.sigma,
            "t" => &mut params.t,
            "a" => &mut params.a,
            "L" => &mut params.l,
            "q" => &mut params.q,
            _ => &mut params.c,
        };
        *slot = Some(v);
    }
    match (kind, issues.is_empty()) {
        (Some(kind), true) => BoundSpec::new(kind, params).map_err(|e| match e {
            selfnorm::Error::Validation(fields) => {
                CliError::Invalid(fields.into_iter().map(|f| SpecIssue::new(f.field, f.reason)).collect())
            }
            other => CliError::Invalid(vec![SpecIssue::new("params", other.to_string())]),
        }),
        _ => Err(CliError::Invalid(issues)),
    }
}
