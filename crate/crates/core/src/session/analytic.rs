//! Closed-form success rate of a generator paired with a verifier, and a
//! Monte Carlo simulation of the same three-rule system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `x` is the generator's success rate. Verifier rates are conditioned on
/// the design's correctness: `a` = P(accept | correct), `b` = P(accept |
/// incorrect), `c` = P(reject | incorrect), `d` = P(reject | correct).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl AnalyticParams {
    /// Complementary rejection rates filled in from the acceptance rates.
    pub fn from_acceptance(x: f64, a: f64, b: f64) -> Self {
        AnalyticParams {
            x,
            a,
            b,
            c: 1.0 - b,
            d: 1.0 - a,
        }
    }

    pub fn check(&self) -> Result<(), AnalyticError> {
        for (name, v) in [("x", self.x), ("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AnalyticError::OutOfRange { name, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalyticError {
    #[error("degenerate input: x*a + (1-x)*b = 0")]
    DegenerateInput,
    #[error("parameter {name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
}

/// `x*a / (x*a + (1-x)*b)`: probability that the first accepted design is
/// correct.
pub fn sys_success_rate(p: &AnalyticParams) -> Result<f64, AnalyticError> {
    p.check()?;
    let accept = p.x * p.a + (1.0 - p.x) * p.b;
    if accept == 0.0 {
        return Err(AnalyticError::DegenerateInput);
    }
    Ok(p.x * p.a / accept)
}

pub fn feedback_true_rate(p: &AnalyticParams) -> f64 {
    p.c - p.d
}

/// Success rate with a finite budget `n` and the uniform pick after `n`
/// rejections. With `q` the per-attempt rejection probability:
/// `s*(1 - q^n) + q^n * x*(1-a)/q`, where `s` is [`sys_success_rate`].
pub fn finite_budget_success_rate(p: &AnalyticParams, n: u32) -> Result<f64, AnalyticError> {
    p.check()?;
    let accept = p.x * p.a + (1.0 - p.x) * p.b;
    let q = 1.0 - accept;
    let qn = q.powi(n as i32);
    let accepted_part = if accept == 0.0 { 0.0 } else { p.x * p.a / accept * (1.0 - qn) };
    let rejected_part = if q == 0.0 { 0.0 } else { qn * p.x * (1.0 - p.a) / q };
    Ok(accepted_part + rejected_part)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonteCarloResult {
    pub rate: f64,
    /// 99% normal-approximation half-width.
    pub half_width: f64,
    pub trials: u64,
}

pub const Z99: f64 = 2.5758;

fn one_trial(p: &AnalyticParams, n: u32, rng: &mut ChaCha8Rng) -> bool {
    let mut drawn = Vec::with_capacity(n as usize);
    for _ in 0..n.max(1) {
        let correct = rng.gen::<f64>() < p.x;
        let accept_p = if correct { p.a } else { p.b };
        if rng.gen::<f64>() < accept_p {
            return correct;
        }
        drawn.push(correct);
    }
    drawn[rng.gen_range(0..drawn.len())]
}

/// Simulates the generate/verify/select rules `trials` times. Each trial
/// draws from its own stream of the seeded generator, so the result does not
/// depend on thread scheduling.
pub fn monte_carlo_system(p: &AnalyticParams, n: u32, trials: u64, seed: u64) -> Result<MonteCarloResult, AnalyticError> {
    p.check()?;
    let trials = trials.max(1);
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            one_trial(p, n, &mut rng) as u64
        })
        .sum();
    let rate = successes as f64 / trials as f64;
    Ok(MonteCarloResult {
        rate,
        half_width: Z99 * (rate * (1.0 - rate) / trials as f64).sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feedback_rate_arithmetic() {
        let p = |c, d| AnalyticParams { x: 0.5, a: 0.5, b: 0.5, c, d };
        assert!((feedback_true_rate(&p(0.8, 0.1)) - 0.7).abs() < 1e-12);
        assert_eq!(feedback_true_rate(&p(0.4, 0.4)), 0.0);
        assert!((feedback_true_rate(&p(0.2, 0.5)) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn degenerate() {
        let p = AnalyticParams::from_acceptance(0.0, 0.5, 0.0);
        assert_eq!(sys_success_rate(&p), Err(AnalyticError::DegenerateInput));
        assert!(matches!(
            sys_success_rate(&AnalyticParams::from_acceptance(1.5, 0.5, 0.5)),
            Err(AnalyticError::OutOfRange { name: "x", .. })
        ));
    }

    #[test]
    fn finite_budget_limits() {
        let p = AnalyticParams::from_acceptance(0.6, 0.9, 0.2);
        let s = sys_success_rate(&p).unwrap();
        assert!((finite_budget_success_rate(&p, 200).unwrap() - s).abs() < 1e-12);
        // One attempt: the design is returned whatever the verdict.
        assert!((finite_budget_success_rate(&p, 1).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn per_trial_streams_are_reproducible() {
        let p = AnalyticParams::from_acceptance(0.3, 0.8, 0.4);
        let a = monte_carlo_system(&p, 5, 2000, 9).unwrap();
        let b = monte_carlo_system(&p, 5, 2000, 9).unwrap();
        assert_eq!(a, b);
    }
}
