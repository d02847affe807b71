//! Martingale-difference laws with closed-form conditional moments.
//!
//! Differences are i.i.d. within a path and the filtration is the natural
//! one, so every conditional moment E[g(ξ_i) | F_{i−1}] equals the
//! unconditional moment E[g(ξ)] computed here.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::normal;
use crate::error::{Error, FieldError, Result};
use crate::rng::{open_unit, CounterRng};

/// User-facing description of a difference law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// `up` with probability `p_up`, `down` otherwise; zero mean required.
    ScaledTwoPoint { p_up: f64, up: f64, down: f64 },
    /// min(Z, c) − E[min(Z, c)] for Z drawn from `base`, with c chosen so that
    /// the supremum of the support equals `y_cap`.
    BoundedAbove { y_cap: f64, base: Box<Family> },
    /// Symmetric two-sided Pareto: |ξ| = scale·U^{−1/beta_tail} with a fair
    /// random sign. E|ξ|^β is finite exactly when β < beta_tail.
    CenteredPareto { beta_tail: f64, scale: f64 },
    Gaussian { sd: f64 },
    /// Scale mixture of centred normals: sd `scales[k]` with probability
    /// `weights[k]`.
    ConditionallySymmetricMixture { weights: Vec<f64>, scales: Vec<f64> },
}

#[derive(Debug, Clone)]
enum Law {
    /// Finite support: (value, probability).
    Atoms(Vec<(f64, f64)>),
    /// Centred normal mixture: (weight, sd).
    Normals(Vec<(f64, f64)>),
    Pareto { alpha: f64, scale: f64 },
    /// min(Z, cap) − shift for Z following the normal mixture.
    CappedNormals { comps: Vec<(f64, f64)>, cap: f64, shift: f64 },
}

/// Theorem hypotheses a model satisfies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preconditions {
    pub square_integrable: bool,
    /// Supremum of the support, when finite.
    pub bounded_above: Option<f64>,
    /// Supremum of |ξ|, when finite.
    pub bounded: Option<f64>,
    pub heavy_on_left: bool,
    pub conditionally_symmetric: bool,
    /// E|ξ|^β < ∞ exactly for β below this order (∞ when all moments exist).
    pub moment_order: f64,
}

/// Validated difference model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct DifferenceModel {
    family: Family,
    law: Law,
}

impl PartialEq for DifferenceModel {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

impl From<DifferenceModel> for Family {
    fn from(m: DifferenceModel) -> Self {
        m.family
    }
}

impl TryFrom<Family> for DifferenceModel {
    type Error = Error;
    fn try_from(f: Family) -> Result<Self> {
        DifferenceModel::new(f)
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Validation(vec![FieldError {
        field,
        reason: reason.into(),
    }])
}

fn build_law(family: &Family) -> Result<Law> {
    match family {
        Family::Rademacher => Ok(Law::Atoms(vec![(-1.0, 0.5), (1.0, 0.5)])),
        &Family::ScaledTwoPoint { p_up, up, down } => {
            if !(p_up > 0.0 && p_up < 1.0) {
                return Err(invalid("p_up", format!("must lie in (0, 1), got {p_up}")));
            }
            if !(up > 0.0 && up.is_finite()) {
                return Err(invalid("up", format!("must be finite and > 0, got {up}")));
            }
            if !(down < 0.0 && down.is_finite()) {
                return Err(invalid("down", format!("must be finite and < 0, got {down}")));
            }
            let mean = p_up * up + (1.0 - p_up) * down;
            if mean.abs() > 1e-12 * (up - down) {
                return Err(invalid(
                    "p_up",
                    format!("p_up*up + (1-p_up)*down must be 0, got {mean}"),
                ));
            }
            Ok(Law::Atoms(vec![(down, 1.0 - p_up), (up, p_up)]))
        }
        &Family::Gaussian { sd } => {
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(invalid("sd", format!("must be finite and > 0, got {sd}")));
            }
            Ok(Law::Normals(vec![(1.0, sd)]))
        }
        Family::ConditionallySymmetricMixture { weights, scales } => {
            if weights.is_empty() || weights.len() != scales.len() {
                return Err(invalid("weights", "must be nonempty and match scales in length"));
            }
            if weights.iter().any(|&w| !(w > 0.0)) {
                return Err(invalid("weights", "must all be > 0"));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid("weights", format!("must sum to 1, got {total}")));
            }
            if scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(invalid("scales", "must all be finite and > 0"));
            }
            Ok(Law::Normals(weights.iter().copied().zip(scales.iter().copied()).collect()))
        }
        &Family::CenteredPareto { beta_tail, scale } => {
            if !(beta_tail > 1.0 && beta_tail.is_finite()) {
                return Err(invalid("beta_tail", format!("must be finite and > 1, got {beta_tail}")));
            }
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(invalid("scale", format!("must be finite and > 0, got {scale}")));
            }
            Ok(Law::Pareto {
                alpha: beta_tail,
                scale,
            })
        }
        Family::BoundedAbove { y_cap, base } => {
            let y_cap = *y_cap;
            if !(y_cap > 0.0 && y_cap.is_finite()) {
                return Err(invalid("y_cap", format!("must be finite and > 0, got {y_cap}")));
            }
            match build_law(base)? {
                Law::Atoms(atoms) => {
                    let cap = solve_cap(y_cap, |c| atoms.iter().map(|&(v, p)| p * (c - v).max(0.0)).sum());
                    let shift = cap - y_cap;
                    let mut out: Vec<(f64, f64)> = Vec::new();
                    for &(v, p) in &atoms {
                        let w = v.min(cap) - shift;
                        match out.iter_mut().find(|(u, _)| *u == w) {
                            Some(slot) => slot.1 += p,
                            None => out.push((w, p)),
                        }
                    }
                    out.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Ok(Law::Atoms(out))
                }
                Law::Normals(comps) => {
                    let cap = solve_cap(y_cap, |c| {
                        comps
                            .iter()
                            .map(|&(w, s)| w * (c * normal::cdf(c / s) + s * normal::pdf(c / s)))
                            .sum()
                    });
                    Ok(Law::CappedNormals {
                        comps,
                        cap,
                        shift: cap - y_cap,
                    })
                }
                _ => Err(invalid("base", "must be a finite-support or normal-mixture family")),
            }
        }
    }
}

/// Solve E[(c − Z)^+] = target for c by bisection. The map is nondecreasing,
/// at least c, and tends to 0 as c → −∞.
fn solve_cap(target: f64, excess: impl Fn(f64) -> f64) -> f64 {
    let mut hi = target;
    let mut lo = -1.0;
    while excess(lo) > target * 0.5 {
        lo *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn pareto_side(alpha: f64, scale: f64, k: u8, from: f64, to: f64) -> f64 {
    // α s^α ∫_from^to r^{k−α−1} dr over r ∈ [scale, ∞)
    let a = from.max(scale);
    if to <= a {
        return 0.0;
    }
    let kk = k as f64;
    if to.is_infinite() && kk >= alpha {
        return f64::INFINITY;
    }
    let coef = alpha * scale.powf(alpha);
    if (kk - alpha).abs() < 1e-14 {
        return coef * (to / a).ln();
    }
    let upper = if to.is_infinite() { 0.0 } else { to.powf(kk - alpha) };
    coef * (a.powf(kk - alpha) - upper) / (alpha - kk)
}

impl Law {
    fn interval_moment(&self, k: u8, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self {
            Law::Atoms(atoms) => atoms
                .iter()
                .filter(|&&(v, _)| lo < v && v <= hi)
                .map(|&(v, p)| p * v.powi(k as i32))
                .sum(),
            Law::Normals(comps) => comps
                .iter()
                .map(|&(w, s)| w * normal::interval_moment(s, k, lo, hi))
                .sum(),
            &Law::Pareto { alpha, scale } => {
                // positive part r ∈ (lo, hi], negative part −r ∈ (lo, hi] ⇔ r ∈ [−hi, −lo)
                let pos = if hi > 0.0 {
                    pareto_side(alpha, scale, k, lo.max(0.0), hi)
                } else {
                    0.0
                };
                let neg = if lo < 0.0 {
                    let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                    sign * pareto_side(alpha, scale, k, (-hi).max(0.0), -lo)
                } else {
                    0.0
                };
                0.5 * (pos + neg)
            }
            Law::CappedNormals { comps, cap, shift } => {
                let (cap, m) = (*cap, *shift);
                let (l, h) = (lo + m, hi + m);
                let upper = h.min(cap);
                let mut acc = 0.0;
                for &(w, s) in comps {
                    let z0 = normal::interval_moment(s, 0, l, upper);
                    let z1 = normal::interval_moment(s, 1, l, upper);
                    let z = match k {
                        0 => z0,
                        1 => z1 - m * z0,
                        _ => normal::interval_moment(s, 2, l, upper) - 2.0 * m * z1 + m * m * z0,
                    };
                    acc += w * z;
                }
                if l < cap && cap <= h {
                    let tail: f64 = comps.iter().map(|&(w, s)| w * normal::cdf(-cap / s)).sum();
                    acc += tail * (cap - m).powi(k as i32);
                }
                acc
            }
        }
    }

    fn neg_abs_moment(&self, beta: f64) -> Option<f64> {
        match self {
            Law::Atoms(atoms) => Some(
                atoms
                    .iter()
                    .filter(|&&(v, _)| v < 0.0)
                    .map(|&(v, p)| p * (-v).powf(beta))
                    .sum(),
            ),
            Law::Normals(comps) => Some(comps.iter().map(|&(w, s)| w * normal::neg_abs_moment(s, beta)).sum()),
            &Law::Pareto { alpha, scale } => Some(if beta < alpha {
                0.5 * alpha * scale.powf(beta) / (alpha - beta)
            } else {
                f64::INFINITY
            }),
            Law::CappedNormals { .. } => None,
        }
    }

    fn sample(&self, rng: &mut CounterRng) -> f64 {
        match self {
            Law::Atoms(atoms) => {
                let u = open_unit(rng);
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms.last().expect("nonempty").0
            }
            Law::Normals(comps) => {
                let sd = pick_component(comps, rng);
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            &Law::Pareto { alpha, scale } => {
                let u = open_unit(rng);
                let r = scale * u.powf(-1.0 / alpha);
                if open_unit(rng) < 0.5 { -r } else { r }
            }
            Law::CappedNormals { comps, cap, shift } => {
                let sd = pick_component(comps, rng);
                let z: f64 = StandardNormal.sample(rng);
                (sd * z).min(*cap) - shift
            }
        }
    }
}

fn pick_component(comps: &[(f64, f64)], rng: &mut CounterRng) -> f64 {
    if comps.len() == 1 {
        return comps[0].1;
    }
    let u = open_unit(rng);
    let mut acc = 0.0;
    for &(w, s) in comps {
        acc += w;
        if u < acc {
            return s;
        }
    }
    comps.last().expect("nonempty").1
}

impl DifferenceModel {
    pub fn new(family: Family) -> Result<Self> {
        let law = build_law(&family)?;
        Ok(DifferenceModel { family, law })
    }

    pub fn rademacher() -> Self {
        Self::new(Family::Rademacher).expect("valid")
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_rademacher(&self) -> bool {
        matches!(self.family, Family::Rademacher)
    }

    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        self.law.sample(rng)
    }

    /// E[ξ^k 1{lo < ξ <= hi}] for k ∈ {0, 1, 2}; may be +∞ when k = 2.
    pub fn interval_moment(&self, k: u8, lo: f64, hi: f64) -> f64 {
        assert!(k <= 2, "moment order {k} not available");
        self.law.interval_moment(k, lo, hi)
    }

    pub fn mean(&self) -> f64 {
        self.interval_moment(1, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// E[ξ²], +∞ for infinite-variance laws.
    pub fn second_moment(&self) -> f64 {
        self.interval_moment(2, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// E[ξ² 1{ξ <= y}].
    pub fn sq_moment_below(&self, y: f64) -> f64 {
        self.interval_moment(2, f64::NEG_INFINITY, y)
    }

    /// E[(ξ⁻)²].
    pub fn neg_sq_moment(&self) -> f64 {
        self.sq_moment_below(0.0)
    }

    /// E[(ξ⁻)^β]; `None` when no closed form is implemented for the family.
    pub fn neg_abs_moment(&self, beta: f64) -> Option<f64> {
        self.law.neg_abs_moment(beta)
    }

    /// E[T_a(ξ)] with T_a(x) = min(|x|, a)·sign(x).
    pub fn truncated_mean(&self, a: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(crate::error::domain(format!("truncation level must be > 0, got {a}")));
        }
        let inf = f64::INFINITY;
        Ok(self.interval_moment(1, -a, a) + a * self.interval_moment(0, a, inf)
            - a * self.interval_moment(0, -inf, -a))
    }

    fn support_sup(&self) -> Option<f64> {
        match &self.law {
            Law::Atoms(atoms) => atoms.iter().map(|a| a.0).reduce(f64::max),
            Law::CappedNormals { cap, shift, .. } => Some(cap - shift),
            _ => None,
        }
    }

    fn abs_sup(&self) -> Option<f64> {
        match &self.law {
            Law::Atoms(atoms) => atoms.iter().map(|a| a.0.abs()).reduce(f64::max),
            _ => None,
        }
    }

    /// Points at which the truncated mean a ↦ E[T_a(ξ)] can attain its
    /// maximum, or a generic log-spaced grid for continuous laws.
    pub fn default_truncation_grid(&self) -> Vec<f64> {
        match &self.law {
            // piecewise linear in a with kinks at the atom magnitudes
            Law::Atoms(atoms) => {
                let mut g: Vec<f64> = atoms.iter().map(|a| a.0.abs()).filter(|&v| v > 0.0).collect();
                g.sort_by(f64::total_cmp);
                g.dedup();
                g
            }
            _ => {
                let s = self.second_moment().min(1e6).sqrt().max(1e-3);
                (-40..=40).map(|i| s * 10f64.powf(i as f64 / 10.0)).collect()
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.law {
            Law::Atoms(atoms) => atoms.iter().all(|&(v, p)| {
                atoms
                    .iter()
                    .any(|&(u, q)| (u + v).abs() <= 1e-15 * v.abs().max(1.0) && (p - q).abs() < 1e-15)
            }),
            Law::Normals(_) | Law::Pareto { .. } => true,
            Law::CappedNormals { .. } => false,
        }
    }

    pub fn preconditions(&self) -> Preconditions {
        let moment_order = match &self.law {
            Law::Pareto { alpha, .. } => *alpha,
            _ => f64::INFINITY,
        };
        Preconditions {
            square_integrable: self.second_moment().is_finite(),
            bounded_above: self.support_sup(),
            bounded: self.abs_sup(),
            heavy_on_left: super::heavy_on_left_verdict(self, &self.default_truncation_grid()).passed,
            conditionally_symmetric: self.is_symmetric(),
            moment_order,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use approx::assert_relative_eq;

    fn all_models() -> Vec<DifferenceModel> {
        [
            Family::Rademacher,
            Family::ScaledTwoPoint {
                p_up: 1.0 / 3.0,
                up: 2.0,
                down: -1.0,
            },
            Family::Gaussian { sd: 0.7 },
            Family::ConditionallySymmetricMixture {
                weights: vec![0.3, 0.7],
                scales: vec![0.5, 2.0],
            },
            Family::CenteredPareto {
                beta_tail: 2.5,
                scale: 1.0,
            },
            Family::BoundedAbove {
                y_cap: 1.0,
                base: Box::new(Family::Gaussian { sd: 1.0 }),
            },
            Family::BoundedAbove {
                y_cap: 0.5,
                base: Box::new(Family::ScaledTwoPoint {
                    p_up: 0.5,
                    up: 2.0,
                    down: -2.0,
                }),
            },
        ]
        .into_iter()
        .map(|f| DifferenceModel::new(f).unwrap())
        .collect()
    }

    #[test]
    fn every_family_has_zero_mean() {
        for m in all_models() {
            assert!(m.mean().abs() < 1e-12, "{:?} mean {}", m.family(), m.mean());
        }
    }

    #[test]
    fn bounded_above_reaches_its_cap() {
        for m in all_models() {
            if let Family::BoundedAbove { y_cap, .. } = m.family() {
                assert_relative_eq!(m.preconditions().bounded_above.unwrap(), *y_cap, max_relative = 1e-12);
                assert_relative_eq!(m.interval_moment(0, f64::NEG_INFINITY, *y_cap), 1.0, max_relative = 1e-12);
                assert_eq!(m.interval_moment(0, *y_cap, f64::INFINITY), 0.0);
            }
        }
    }

    /// Analytic moments against 10⁶ draws, within 5 standard errors.
    #[test]
    fn analytic_moments_match_empirical() {
        let n = 1_000_000;
        for (idx, m) in all_models().into_iter().enumerate() {
            let key = StreamKey::new(99).child(idx as u64);
            let draws: Vec<f64> = (0..n).map(|i| m.sample(&mut key.child(i).rng())).collect();
            type Check<'a> = (&'a str, Box<dyn Fn(f64) -> f64>, f64);
            let checks: Vec<Check> = vec![
                ("mean", Box::new(|x| x), m.mean()),
                ("E[x^2 1{x<=0.5}]", Box::new(|x: f64| if x <= 0.5 { x * x } else { 0.0 }), m.sq_moment_below(0.5)),
                ("E[(x-)^2]", Box::new(|x: f64| if x < 0.0 { x * x } else { 0.0 }), m.neg_sq_moment()),
                ("P(x > 1)", Box::new(|x: f64| (x > 1.0) as u8 as f64), m.interval_moment(0, 1.0, f64::INFINITY)),
                (
                    "E[(x-)^1.5]",
                    Box::new(|x: f64| if x < 0.0 { (-x).powf(1.5) } else { 0.0 }),
                    m.neg_abs_moment(1.5).unwrap_or(f64::NAN),
                ),
            ];
            for (name, g, expected) in checks {
                if expected.is_nan() {
                    continue;
                }
                let vals: Vec<f64> = draws.iter().map(|&x| g(x)).collect();
                let (mean, se) = crate::exec::mean_and_se(&vals);
                assert!(
                    (mean - expected).abs() <= 5.0 * se.max(1e-12),
                    "{:?} {name}: empirical {mean} ± {se}, analytic {expected}",
                    m.family()
                );
            }
        }
    }

    #[test]
    fn pareto_moments() {
        let m = DifferenceModel::new(Family::CenteredPareto {
            beta_tail: 1.9,
            scale: 1.0,
        })
        .unwrap();
        assert!(m.second_moment().is_infinite());
        assert!(!m.preconditions().square_integrable);
        assert_relative_eq!(m.neg_abs_moment(1.5).unwrap(), 0.5 * 1.9 / 0.4, max_relative = 1e-14);
        assert!(m.neg_abs_moment(1.95).unwrap().is_infinite());
        assert_eq!(m.truncated_mean(3.0).unwrap(), 0.0);
        assert_eq!(m.preconditions().moment_order, 1.9);
    }

    #[test]
    fn rademacher_moments() {
        let m = DifferenceModel::rademacher();
        assert_eq!(m.second_moment(), 1.0);
        assert_eq!(m.neg_sq_moment(), 0.5);
        assert_eq!(m.sq_moment_below(0.3), 0.5);
        assert_eq!(m.sq_moment_below(1.0), 1.0);
        assert_eq!(m.neg_abs_moment(1.5), Some(0.5));
        let pre = m.preconditions();
        assert!(pre.conditionally_symmetric && pre.heavy_on_left && pre.square_integrable);
        assert_eq!(pre.bounded, Some(1.0));
    }

    #[test]
    fn symmetric_laws_split_variance_evenly() {
        for m in all_models().into_iter().filter(|m| m.is_symmetric() && m.second_moment().is_finite()) {
            assert_relative_eq!(m.neg_sq_moment(), m.second_moment() / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn invalid_families_rejected() {
        let bad = [
            Family::ScaledTwoPoint {
                p_up: 0.5,
                up: 2.0,
                down: -1.0,
            },
            Family::Gaussian { sd: 0.0 },
            Family::CenteredPareto {
                beta_tail: 1.0,
                scale: 1.0,
            },
            Family::ConditionallySymmetricMixture {
                weights: vec![0.5, 0.6],
                scales: vec![1.0, 2.0],
            },
            Family::BoundedAbove {
                y_cap: 1.0,
                base: Box::new(Family::CenteredPareto {
                    beta_tail: 1.5,
                    scale: 1.0,
                }),
            },
        ];
        for f in bad {
            assert!(DifferenceModel::new(f.clone()).is_err(), "{f:?}");
        }
    }

    #[test]
    fn json_description_round_trip() {
        let m = DifferenceModel::new(Family::BoundedAbove {
            y_cap: 1.0,
            base: Box::new(Family::Gaussian { sd: 1.0 }),
        })
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"family\":\"bounded_above\""), "{s}");
        let back: DifferenceModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<DifferenceModel>(r#"{"family":"gaussian","sd":-1}"#).is_err());
    }
}
