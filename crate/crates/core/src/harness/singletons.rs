use serde::{Deserialize, Serialize};

use crate::analytic::{last_window_bound, singleton_bounds, BallsBinsParams};
use crate::ballsbins::Thrower;
use crate::error::Result;
use crate::rng::RngStream;

use super::trials::run_trials;
use super::{binomial_slack, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n_balls: u64,
    pub n_bins: u64,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub lower_violations: u64,
    pub upper_violations: u64,
    pub empirical_violation_rate_lower: f64,
    pub empirical_violation_rate_upper: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// Counts trials whose singleton count falls below the lower concentration
/// threshold or above the upper one. Each rate passes if it is at most its
/// failure bound plus three binomial standard deviations.
pub fn concentration_experiment(
    n_balls: u64,
    n_bins: u64,
    epsilon: f64,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<ConcentrationReport> {
    let params = BallsBinsParams::new(n_balls, n_bins)?;
    let (lower, upper) = singleton_bounds(params, epsilon)?;
    let counts = run_trials(trials, workers, |t| {
        let mut rng = RngStream::new(seed, t).generator();
        Thrower::new().throw(&mut rng, n_balls, n_bins).singletons
    })?;
    let lower_violations = counts.iter().filter(|&&c| (c as f64) < lower.threshold).count() as u64;
    let upper_violations = counts.iter().filter(|&&c| (c as f64) > upper.threshold).count() as u64;
    let rate_lower = lower_violations as f64 / trials as f64;
    let rate_upper = upper_violations as f64 / trials as f64;
    let verdicts = vec![
        Verdict::at_most(
            "lower_violation_rate",
            lower.failure_prob + binomial_slack(lower.failure_prob, trials),
            rate_lower,
        ),
        Verdict::at_most(
            "upper_violation_rate",
            upper.failure_prob + binomial_slack(upper.failure_prob, trials),
            rate_upper,
        ),
    ];
    Ok(ConcentrationReport {
        n_balls,
        n_bins,
        epsilon,
        trials,
        seed,
        lower_threshold: lower.threshold,
        upper_threshold: upper.threshold,
        lower_violations,
        upper_violations,
        empirical_violation_rate_lower: rate_lower,
        empirical_violation_rate_upper: rate_upper,
        bound_lower: lower.failure_prob,
        bound_upper: upper.failure_prob,
        pass: verdicts.iter().all(|v| v.pass),
        verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LastWindowReport {
    pub m: u64,
    pub w: u64,
    pub trials: u64,
    pub seed: u64,
    pub all_succeed: u64,
    pub empirical_all_succeed_rate: f64,
    pub bound: f64,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// Rate at which all `m` packets land in distinct slots of a `w`-slot window.
/// Passes if the rate is at least `1 - m^2/w` minus three binomial standard
/// deviations.
pub fn last_window_experiment(
    m: u64,
    w: u64,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<LastWindowReport> {
    let bound = last_window_bound(m, w)?;
    let clear = run_trials(trials, workers, |t| {
        let mut rng = RngStream::new(seed, t).generator();
        Thrower::new().throw(&mut rng, m, w).singletons == m
    })?;
    let all_succeed = clear.iter().filter(|&&c| c).count() as u64;
    let rate = all_succeed as f64 / trials as f64;
    let verdicts = vec![Verdict::at_least(
        "all_succeed_rate",
        bound - binomial_slack(bound, trials),
        rate,
    )];
    Ok(LastWindowReport {
        m,
        w,
        trials,
        seed,
        all_succeed,
        empirical_all_succeed_rate: rate,
        bound,
        pass: verdicts.iter().all(|v| v.pass),
        verdicts,
    })
}
