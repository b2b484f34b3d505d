use proptest::prelude::*;
use rtlcheck::session::analytic::{
    feedback_true_rate, finite_budget_success_rate, monte_carlo_system, sys_success_rate, AnalyticError, AnalyticParams,
};
use rtlcheck::session::metrics::{compute_metrics_from, ConfusionCounts, MetricsError, SessionVerdicts};

fn p(x: f64, a: f64, b: f64) -> AnalyticParams {
    AnalyticParams::from_acceptance(x, a, b)
}

#[test]
fn closed_form_examples() {
    for x in [0.1, 0.5, 0.9] {
        assert!((sys_success_rate(&p(x, 0.4, 0.4)).unwrap() - x).abs() < 1e-15);
    }
    assert_eq!(sys_success_rate(&p(0.5, 0.7, 0.7)).unwrap(), 0.5);
    // 0.6*0.9 / (0.6*0.9 + 0.4*0.2) = 0.54 / 0.62
    let v = sys_success_rate(&p(0.6, 0.9, 0.2)).unwrap();
    assert!((v - 0.870968).abs() < 1e-6, "{v}");
    assert_eq!(sys_success_rate(&p(1.0, 0.3, 0.8)).unwrap(), 1.0);
    assert_eq!(sys_success_rate(&p(0.0, 0.3, 0.0)), Err(AnalyticError::DegenerateInput));
}

#[test]
fn feedback_rate() {
    let q = |c: f64, d: f64| AnalyticParams { x: 0.3, a: 1.0 - d, b: 1.0 - c, c, d };
    assert!((feedback_true_rate(&q(0.8, 0.1)) - 0.7).abs() < 1e-12);
    assert_eq!(feedback_true_rate(&q(0.35, 0.35)), 0.0);
    assert!((feedback_true_rate(&q(0.2, 0.5)) + 0.3).abs() < 1e-12);
}

#[test]
fn strict_gain_grid() {
    let xs: Vec<f64> = (1..=10).map(|k| k as f64 / 11.0).collect();
    let ab = [(0.9, 0.2), (0.2, 0.9), (0.5, 0.5), (1.0, 0.0), (0.0, 1.0), (0.3, 0.3), (0.6, 0.59), (0.59, 0.6), (1.0, 1.0), (0.05, 0.01)];
    let mut points = 0;
    for &x in &xs {
        for &(a, b) in &ab {
            points += 1;
            let Ok(s) = sys_success_rate(&p(x, a, b)) else { panic!("degenerate at {x},{a},{b}") };
            if a == b {
                assert!((s - x).abs() < 1e-12);
            } else {
                assert_eq!(s > x, a > b, "x={x} a={a} b={b} s={s}");
            }
        }
    }
    assert_eq!(points, 100);
}

#[test]
fn monte_carlo_limits() {
    let perfect = monte_carlo_system(&p(0.5, 1.0, 0.0), 64, 100_000, 11).unwrap();
    assert!((perfect.rate - 1.0).abs() <= perfect.half_width.max(1e-12));
    let blind = monte_carlo_system(&p(0.5, 0.7, 0.7), 64, 100_000, 11).unwrap();
    assert!((blind.rate - 0.5).abs() <= blind.half_width, "{blind:?}");
}

#[test]
fn monte_carlo_matches_finite_budget_form() {
    let q = p(0.6, 0.9, 0.2);
    let mc = monte_carlo_system(&q, 5, 100_000, 5).unwrap();
    let exact = finite_budget_success_rate(&q, 5).unwrap();
    assert!((mc.rate - exact).abs() <= mc.half_width, "mc {mc:?} vs {exact}");
    // With a large budget the exhaustion branch vanishes.
    let mc = monte_carlo_system(&q, 200, 100_000, 5).unwrap();
    assert!((mc.rate - sys_success_rate(&q).unwrap()).abs() <= mc.half_width);
}

#[test]
fn finite_budget_exhaustive_enumeration() {
    // Enumerate every accept/reject and correct/incorrect history for small budgets.
    let q = p(0.35, 0.7, 0.25);
    for n in 1..=4u32 {
        let mut total = 0.0;
        // Each attempt is one of: correct-accepted, incorrect-accepted, correct-rejected, incorrect-rejected.
        let probs = [q.x * q.a, (1.0 - q.x) * q.b, q.x * (1.0 - q.a), (1.0 - q.x) * (1.0 - q.b)];
        fn walk(depth: u32, n: u32, prob: f64, correct_rejects: u32, probs: &[f64; 4], total: &mut f64) {
            if depth == n {
                *total += prob * correct_rejects as f64 / n as f64;
                return;
            }
            *total += prob * probs[0];
            walk(depth + 1, n, prob * probs[2], correct_rejects + 1, probs, total);
            walk(depth + 1, n, prob * probs[3], correct_rejects, probs, total);
        }
        walk(0, n, 1.0, 0, &probs, &mut total);
        assert!((finite_budget_success_rate(&q, n).unwrap() - total).abs() < 1e-12, "n={n}");
    }
}

fn sv(accepted: &[u8], selected: usize) -> SessionVerdicts {
    SessionVerdicts {
        accepted: accepted.iter().map(|&v| v == 1).collect(),
        selected,
    }
}

fn truth(bits: &[u8]) -> Vec<bool> {
    bits.iter().map(|&v| v == 1).collect()
}

/// Ten sessions, counted by hand:
///
/// | s | verifier      | truth         | selected | sel | any |
/// |---|---------------|---------------|----------|-----|-----|
/// | 0 | P             | 1             | 0        | 1   | 1   |
/// | 1 | F P           | 0 1           | 1        | 1   | 1   |
/// | 2 | F F P         | 0 0 1         | 2        | 1   | 1   |
/// | 3 | P             | 0             | 0        | 0   | 0   |
/// | 4 | F F F F F     | 0 0 0 0 0     | 3        | 0   | 0   |
/// | 5 | F F F F F     | 0 1 0 0 0     | 4        | 0   | 1   |
/// | 6 | F P           | 1 1           | 1        | 1   | 1   |
/// | 7 | P             | 1             | 0        | 1   | 1   |
/// | 8 | F F F F F     | 0 0 1 0 0     | 2        | 1   | 1   |
/// | 9 | F P           | 0 1           | 1        | 1   | 1   |
///
/// sel = 7/10, any = 8/10.
/// tp: s0,s1,s2,s6,s7,s9 = 6; fp: s3 = 1; fn: s5, s6, s8 = 3;
/// tn: s1 1, s2 2, s4 5, s5 4, s8 4, s9 1 = 17. Total 27 attempts.
#[test]
fn ten_session_hand_count() {
    let sessions = vec![
        sv(&[1], 0),
        sv(&[0, 1], 1),
        sv(&[0, 0, 1], 2),
        sv(&[1], 0),
        sv(&[0, 0, 0, 0, 0], 3),
        sv(&[0, 0, 0, 0, 0], 4),
        sv(&[0, 1], 1),
        sv(&[1], 0),
        sv(&[0, 0, 0, 0, 0], 2),
        sv(&[0, 1], 1),
    ];
    let gt = vec![
        truth(&[1]),
        truth(&[0, 1]),
        truth(&[0, 0, 1]),
        truth(&[0]),
        truth(&[0, 0, 0, 0, 0]),
        truth(&[0, 1, 0, 0, 0]),
        truth(&[1, 1]),
        truth(&[1]),
        truth(&[0, 0, 1, 0, 0]),
        truth(&[0, 1]),
    ];
    let m = compute_metrics_from(&sessions, &gt).unwrap();
    assert_eq!(m.sys_sel_pass1, 0.7);
    assert_eq!(m.sys_inner_pass5, 0.8);
    assert_eq!(m.counts(), ConfusionCounts { tp: 6, fp: 1, tn: 17, fn_: 3 });
    assert!(m.sys_inner_pass5 >= m.sys_sel_pass1);
    assert_eq!(m.rates.a, Some(6.0 / 9.0));
    assert_eq!(m.rates.b, Some(1.0 / 18.0));

    let v = serde_json::to_value(&m).unwrap();
    for k in ["sys_sel_pass1", "sys_inner_pass5", "tp", "fp", "tn", "fn", "rates"] {
        assert!(v.get(k).is_some(), "{k}");
    }
}

#[test]
fn metric_errors() {
    assert_eq!(compute_metrics_from(&[], &[]), Err(MetricsError::Empty));
    assert!(matches!(compute_metrics_from(&[sv(&[1, 0], 0)], &[truth(&[1])]), Err(MetricsError::LengthMismatch { .. })));
    let m = compute_metrics_from(&[sv(&[1], 0)], &[truth(&[1])]).unwrap();
    assert_eq!(m.rates.b, None);
    assert_eq!(serde_json::to_value(&m).unwrap()["rates"]["b"], serde_json::Value::Null);
}

proptest! {
    #[test]
    fn inner_never_below_selected(
        sessions in prop::collection::vec(
            prop::collection::vec((any::<bool>(), any::<bool>()), 1..6).prop_flat_map(|att| {
                let n = att.len();
                (Just(att), 0..n)
            }),
            1..20,
        )
    ) {
        let sv: Vec<SessionVerdicts> = sessions.iter().map(|(att, sel)| SessionVerdicts {
            accepted: att.iter().map(|a| a.0).collect(),
            selected: *sel,
        }).collect();
        let gt: Vec<Vec<bool>> = sessions.iter().map(|(att, _)| att.iter().map(|a| a.1).collect()).collect();
        let m = compute_metrics_from(&sv, &gt).unwrap();
        prop_assert!(m.sys_inner_pass5 >= m.sys_sel_pass1);
        let total: usize = gt.iter().map(Vec::len).sum();
        prop_assert_eq!((m.tp + m.fp + m.tn + m.fn_) as usize, total);
    }

    #[test]
    fn strict_gain_iff_a_above_b(x in 0.001f64..0.999, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        prop_assume!(x * a + (1.0 - x) * b > 0.0);
        let s = sys_success_rate(&p(x, a, b)).unwrap();
        if (a - b).abs() > 1e-9 {
            prop_assert_eq!(s > x, a > b);
        } else {
            prop_assert!((s - x).abs() < 1e-6);
        }
    }

    #[test]
    fn rates_derived_from_counts_are_complementary(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
        let r = ConfusionCounts { tp, fp, tn, fn_ }.rates();
        if let (Some(a), Some(d)) = (r.a, r.d) {
            prop_assert!((a + d - 1.0).abs() < 1e-9);
        }
        if let (Some(b), Some(c)) = (r.b, r.c) {
            prop_assert!((b + c - 1.0).abs() < 1e-9);
        }
    }
}
