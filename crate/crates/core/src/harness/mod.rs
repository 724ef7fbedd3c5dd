//! Experiment orchestration: makespan statistics over many trials, per-window
//! recursion audits, and concentration and last-window experiments.
//!
//! Trial `t` of an experiment seeded with `s` always draws from
//! `RngStream::new(s, t)`, so every aggregate is independent of how trials are
//! spread over worker threads.

mod audit;
mod calibration;
mod makespan;
mod singletons;
mod trials;

use serde::{Deserialize, Serialize};

pub use audit::{
    aligned_start, recursion_audit, AuditCase, AuditConfig, AuditEntry, AuditTally, RecursionAudit,
};
pub use calibration::{calibrate, Calibration, CALIBRATION_HEADROOM};
pub use makespan::{
    makespan_experiment, makespan_experiment_with, BoundConfig, ExperimentOptions, MakespanStats,
};
pub use singletons::{
    concentration_experiment, last_window_experiment, ConcentrationReport, LastWindowReport,
};
pub use trials::run_trials;

/// A named pass/fail check of an observed quantity against a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub bound: f64,
    pub observed: f64,
    pub pass: bool,
}

impl Verdict {
    /// Passes iff `observed <= bound`.
    pub fn at_most(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Verdict {
            name: name.into(),
            bound,
            observed,
            pass: observed <= bound,
        }
    }

    /// Passes iff `observed >= bound`.
    pub fn at_least(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Verdict {
            name: name.into(),
            bound,
            observed,
            pass: observed >= bound,
        }
    }
}

/// Three standard deviations of a binomial proportion with success
/// probability `p` (clamped to `[0, 1]`) over `trials` draws.
pub fn binomial_slack(p: f64, trials: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
