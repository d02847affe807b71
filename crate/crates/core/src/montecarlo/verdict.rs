use serde::{Deserialize, Serialize};
use std::fmt;

use super::estimate::McEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    ViolationEvidence,
    Vacuous,
}

impl VerdictStatus {
    pub fn name(self) -> &'static str {
        match self {
            VerdictStatus::Pass => "pass",
            VerdictStatus::ViolationEvidence => "violation_evidence",
            VerdictStatus::Vacuous => "vacuous",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [VerdictStatus::Pass, VerdictStatus::ViolationEvidence, VerdictStatus::Vacuous]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of comparing an estimated probability with a bound. A violation
/// is only claimed when the lower confidence limit exceeds the bound; a pass
/// is absence of evidence, not a proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationVerdict {
    pub bound_value: f64,
    pub estimate: McEstimate,
    pub status: VerdictStatus,
    /// bound − ci_lo
    pub margin: f64,
}

pub fn domination_check(estimate: &McEstimate, bound: f64) -> DominationVerdict {
    assert!(bound >= 0.0, "bound must be nonnegative, got {bound}");
    let status = if bound >= 1.0 {
        VerdictStatus::Vacuous
    } else if estimate.ci_lo > bound {
        VerdictStatus::ViolationEvidence
    } else {
        VerdictStatus::Pass
    };
    DominationVerdict {
        bound_value: bound,
        estimate: estimate.clone(),
        status,
        margin: bound - estimate.ci_lo,
    }
}

/// Exact values and bounds are compared with this relative slack to absorb
/// floating-point rounding in the bound evaluation.
pub const EXACT_REL_TOL: f64 = 1e-12;

/// Status of an exactly computed probability against a bound.
pub fn exact_status(exact: f64, bound: f64) -> VerdictStatus {
    if bound >= 1.0 {
        VerdictStatus::Vacuous
    } else if exact > bound * (1.0 + EXACT_REL_TOL) + f64::MIN_POSITIVE {
        VerdictStatus::ViolationEvidence
    } else {
        VerdictStatus::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(ci_lo: f64) -> McEstimate {
        McEstimate {
            n_rep: 1000,
            hits: 0,
            p_hat: ci_lo,
            ci_lo,
            ci_hi: 1.0,
            gamma: 0.99,
        }
    }

    #[test]
    fn statuses() {
        assert_eq!(domination_check(&est(0.1), 0.5).status, VerdictStatus::Pass);
        assert_eq!(domination_check(&est(0.6), 0.5).status, VerdictStatus::ViolationEvidence);
        assert_eq!(domination_check(&est(0.6), 1.3).status, VerdictStatus::Vacuous);
        let v = domination_check(&est(0.1), 0.5);
        assert!((v.margin - 0.4).abs() < 1e-15);
    }

    #[test]
    fn exact_statuses() {
        assert_eq!(exact_status(0.25, 0.25), VerdictStatus::Pass);
        assert_eq!(exact_status(0.26, 0.25), VerdictStatus::ViolationEvidence);
        assert_eq!(exact_status(0.0, 1.0), VerdictStatus::Vacuous);
    }
}
