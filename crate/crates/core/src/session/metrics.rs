//! System-level pass metrics against externally supplied ground truth.

use serde::Serialize;
use thiserror::Error;

use super::SessionOutcome;

/// Verifier verdict against ground truth, counted over attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    /// Accepted, truly correct.
    pub tp: u64,
    /// Accepted, truly incorrect.
    pub fp: u64,
    /// Rejected, truly incorrect.
    pub tn: u64,
    /// Rejected, truly correct.
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(n: u64, d: u64) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
}

impl ConfusionCounts {
    pub fn rates(&self) -> DerivedRates {
        DerivedRates {
            a: ratio(self.tp, self.tp + self.fn_),
            b: ratio(self.fp, self.fp + self.tn),
            c: ratio(self.tn, self.tn + self.fp),
            d: ratio(self.fn_, self.fn_ + self.tp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub sys_sel_pass1: f64,
    pub sys_inner_pass5: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub rates: DerivedRates,
    pub sessions: usize,
}

impl Metrics {
    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no sessions to score")]
    Empty,
    #[error("{what}: expected {expected}, got {got}")]
    LengthMismatch { what: String, expected: usize, got: usize },
    #[error("session {0} has no selected attempt")]
    NoSelection(usize),
}

/// What scoring needs from one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionVerdicts {
    /// Verifier verdict per attempt.
    pub accepted: Vec<bool>,
    pub selected: usize,
}

impl TryFrom<&SessionOutcome> for SessionVerdicts {
    type Error = ();

    fn try_from(o: &SessionOutcome) -> Result<Self, ()> {
        Ok(SessionVerdicts {
            accepted: o.attempts.iter().map(|a| a.passed).collect(),
            selected: o.selected_index.ok_or(())?,
        })
    }
}

/// `truth[s][k]` says whether attempt `k` of session `s` is correct per the
/// external oracle.
pub fn compute_metrics_from(sessions: &[SessionVerdicts], truth: &[Vec<bool>]) -> Result<Metrics, MetricsError> {
    if sessions.is_empty() {
        return Err(MetricsError::Empty);
    }
    if sessions.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            what: "ground-truth sessions".into(),
            expected: sessions.len(),
            got: truth.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    let (mut sel, mut inner) = (0u64, 0u64);
    for (s, (v, t)) in sessions.iter().zip(truth).enumerate() {
        if v.accepted.len() != t.len() {
            return Err(MetricsError::LengthMismatch {
                what: format!("ground truth for session {s}"),
                expected: v.accepted.len(),
                got: t.len(),
            });
        }
        if v.selected >= t.len() {
            return Err(MetricsError::NoSelection(s));
        }
        sel += t[v.selected] as u64;
        inner += t.iter().any(|&ok| ok) as u64;
        for (&acc, &ok) in v.accepted.iter().zip(t) {
            match (acc, ok) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
    }
    let n = sessions.len() as f64;
    Ok(Metrics {
        sys_sel_pass1: sel as f64 / n,
        sys_inner_pass5: inner as f64 / n,
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        rates: c.rates(),
        sessions: sessions.len(),
    })
}

pub fn compute_metrics(outcomes: &[SessionOutcome], truth: &[Vec<bool>]) -> Result<Metrics, MetricsError> {
    let sessions = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| SessionVerdicts::try_from(o).map_err(|_| MetricsError::NoSelection(k)))
        .collect::<Result<Vec<_>, _>>()?;
    compute_metrics_from(&sessions, truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejected_correct_attempt() {
        let s = [SessionVerdicts {
            accepted: vec![false, false],
            selected: 0,
        }];
        let m = compute_metrics_from(&s, &[vec![false, true]]).unwrap();
        assert_eq!(m.sys_sel_pass1, 0.0);
        assert_eq!(m.sys_inner_pass5, 1.0);
        assert_eq!((m.tn, m.fn_, m.tp, m.fp), (1, 1, 0, 0));
    }

    #[test]
    fn empty_and_mismatch() {
        assert_eq!(compute_metrics_from(&[], &[]), Err(MetricsError::Empty));
        let s = [SessionVerdicts {
            accepted: vec![true],
            selected: 0,
        }];
        assert!(matches!(compute_metrics_from(&s, &[]), Err(MetricsError::LengthMismatch { .. })));
    }
}
