use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::processes::{PathStats, StatsRequest};

/// Ties (S_n/N = x, or N' on a window edge) are common for discrete laws, and
/// floating-point evaluation may land either side. Events are widened by this
/// relative slack so ties always count as hits.
pub const TIE_TOL: f64 = 1e-12;

/// A path functional used as a normalizer or a window statistic. Parameters
/// y, a and β come from the event's [`StatsRequest`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stat", rename_all = "snake_case")]
pub enum Statistic {
    /// The constant 1 (plain S_n events).
    One,
    /// B_n(y)
    Bracket,
    /// √B_n(y)
    SqrtBracket,
    /// [S]_n
    QuadVar,
    /// √[S]_n
    SqrtQuadVar,
    /// ⟨S⟩_n
    CondVar,
    /// H_n^a
    Dvz,
    /// G_n(β)
    GBeta,
    /// G_n(β)^{1/β}
    GBetaRoot,
    /// a + b·[S]_n
    AffineQuadVar { a: f64, b: f64 },
}

impl Statistic {
    pub fn value(&self, s: &PathStats) -> Result<f64> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| Error::Unsupported(format!("{what} is not available for this model")))
        };
        Ok(match *self {
            Statistic::One => 1.0,
            Statistic::Bracket => need(s.b_n, "B_n(y)")?,
            Statistic::SqrtBracket => need(s.b_n, "B_n(y)")?.sqrt(),
            Statistic::QuadVar => s.sq_var,
            Statistic::SqrtQuadVar => s.sq_var.sqrt(),
            Statistic::CondVar => need(s.cond_var, "<S>_n")?,
            Statistic::Dvz => need(s.h_n, "H_n^a")?,
            Statistic::GBeta => need(s.g_n, "G_n(beta)")?,
            Statistic::GBetaRoot => {
                let beta = s.request.beta.ok_or_else(|| Error::Unsupported("G_n(beta) without beta".into()))?;
                need(s.g_n, "G_n(beta)")?.powf(1.0 / beta)
            }
            Statistic::AffineQuadVar { a, b } => a + b * s.sq_var,
        })
    }

    fn symbol(&self) -> String {
        match self {
            Statistic::One => "1".into(),
            Statistic::Bracket => "B_n(y)".into(),
            Statistic::SqrtBracket => "sqrt(B_n(y))".into(),
            Statistic::QuadVar => "[S]_n".into(),
            Statistic::SqrtQuadVar => "sqrt([S]_n)".into(),
            Statistic::CondVar => "<S>_n".into(),
            Statistic::Dvz => "H_n^a".into(),
            Statistic::GBeta => "G_n(beta)".into(),
            Statistic::GBetaRoot => "G_n(beta)^(1/beta)".into(),
            Statistic::AffineQuadVar { a, b } => format!("({a} + {b}[S]_n)"),
        }
    }
}

/// Closed window lo <= N' <= hi on a second statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub stat: Statistic,
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn at_least(stat: Statistic, lo: f64) -> Self {
        Window { stat, lo, hi: f64::INFINITY }
    }

    pub fn at_most(stat: Statistic, hi: f64) -> Self {
        Window { stat, lo: f64::NEG_INFINITY, hi }
    }
}

/// The event {S_n / N >= x, lo <= N' <= hi}.
///
/// A nonpositive normalizer makes the event false. With the models used here
/// a zero normalizer only occurs together with S_n <= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEvent {
    pub normalizer: Statistic,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    pub request: StatsRequest,
}

impl TailEvent {
    pub fn ratio(normalizer: Statistic, x: f64, request: StatsRequest) -> Self {
        TailEvent {
            normalizer,
            x,
            window: None,
            request,
        }
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = Some(window);
        self
    }

    pub fn holds(&self, s: &PathStats) -> Result<bool> {
        debug_assert_eq!(s.request, self.request, "stats computed for a different request");
        let norm = self.normalizer.value(s)?;
        let window_val = match &self.window {
            Some(w) => Some(w.stat.value(s)?),
            None => None,
        };
        if norm <= 0.0 {
            return Ok(false);
        }
        let ratio = s.s_n / norm;
        if ratio < self.x - TIE_TOL * self.x.abs().max(1.0) {
            return Ok(false);
        }
        Ok(match (self.window, window_val) {
            (Some(w), Some(v)) => {
                let lo_ok = w.lo == f64::NEG_INFINITY || v >= w.lo - TIE_TOL * w.lo.abs().max(1.0);
                let hi_ok = w.hi == f64::INFINITY || v <= w.hi + TIE_TOL * w.hi.abs().max(1.0);
                lo_ok && hi_ok
            }
            _ => true,
        })
    }
}

impl fmt::Display for TailEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S_n/{} >= {}", self.normalizer.symbol(), self.x)?;
        if let Some(w) = &self.window {
            write!(f, ", {} <= {} <= {}", w.lo, w.stat.symbol(), w.hi)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{stats_from_xs, DifferenceModel};

    fn st(xs: &[f64], y: f64) -> PathStats {
        stats_from_xs(xs, &DifferenceModel::rademacher(), &StatsRequest { y, a: 0.0, beta: None }).unwrap()
    }

    #[test]
    fn ties_count_as_hits() {
        let req = StatsRequest::default();
        let s = st(&[1.0, 1.0], 0.0);
        let ev = TailEvent::ratio(Statistic::SqrtQuadVar, 2f64.sqrt(), req);
        assert!(ev.holds(&s).unwrap());
        let ev = TailEvent::ratio(Statistic::SqrtQuadVar, 2f64.sqrt() * (1.0 + 1e-9), req);
        assert!(!ev.holds(&s).unwrap());
    }

    #[test]
    fn window_is_closed() {
        let req = StatsRequest::default();
        let s = st(&[1.0, -1.0, 1.0], 0.0); // B_3(0) = 3.5
        let ev = TailEvent::ratio(Statistic::One, 1.0, req);
        assert!(ev.with_window(Window { stat: Statistic::Bracket, lo: 3.5, hi: 3.5 }).holds(&s).unwrap());
        assert!(!ev.with_window(Window::at_least(Statistic::Bracket, 3.6)).holds(&s).unwrap());
        assert!(ev.with_window(Window::at_most(Statistic::Bracket, 3.5)).holds(&s).unwrap());
    }

    #[test]
    fn zero_normalizer_is_false() {
        let m = DifferenceModel::new(crate::processes::Family::Gaussian { sd: 1.0 }).unwrap();
        let s = stats_from_xs(&[0.0, 0.0], &m, &StatsRequest::default()).unwrap();
        assert!(!TailEvent::ratio(Statistic::QuadVar, -1.0, StatsRequest::default()).holds(&s).unwrap());
    }

    #[test]
    fn unavailable_statistic_is_an_error() {
        let s = st(&[1.0], 0.0);
        let ev = TailEvent::ratio(Statistic::GBeta, 0.1, StatsRequest::default());
        assert!(matches!(ev.holds(&s), Err(Error::Unsupported(_))));
    }
}
