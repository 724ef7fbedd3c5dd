//! Closed-form singleton probabilities and concentration bounds.
//!
//! `P_j` denotes the probability that bin `j+1` is a singleton given that
//! bins `1..=j` are singletons. Everything here is pure; floating-point paths
//! work in log space, and every small-scale quantity also has an exact
//! rational twin.

mod bounds;
mod conditional;
mod property;

pub use bounds::{
    chernoff_lower_tail, chernoff_upper_tail, shrink_epsilon, expected_singletons,
    exp_sandwich, last_window_bound, llb_epsilon, singleton_bounds, BoundSide,
    ConcentrationBound,
};
pub use conditional::{
    check_pj_monotone, cond_prob_pj, cond_prob_pj_exact, ln_cond_prob_pj, pj_ratio_direct,
    pj_ratio_expansion, Monotonicity,
};
pub use property::{
    all_distinct_prob_closed, check_property1, joint_singleton_prob_closed,
    singleton_marginal_exact, Property1Check,
};

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::intmath::{at_least_plus_sqrt, at_most_minus_sqrt};

/// `N` balls into `B` bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BallsBinsParams {
    n_balls: u64,
    n_bins: u64,
}

impl BallsBinsParams {
    pub fn new(n_balls: u64, n_bins: u64) -> Result<Self> {
        if n_balls == 0 {
            return Err(Error::invalid("n_balls", "must be >= 1"));
        }
        if n_bins == 0 {
            return Err(Error::invalid("n_bins", "must be >= 1"));
        }
        Ok(Self { n_balls, n_bins })
    }

    pub fn n_balls(&self) -> u64 {
        self.n_balls
    }

    pub fn n_bins(&self) -> u64 {
        self.n_bins
    }

    /// `min(N, B)`: the number of bins that can simultaneously be singletons.
    pub fn max_singletons(&self) -> u64 {
        self.n_balls.min(self.n_bins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `B >= N + sqrt(N)`
    Above,
    /// `B <= N - sqrt(N)`
    Below,
    Gap,
}

impl Regime {
    pub fn is_gap(self) -> bool {
        self == Regime::Gap
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Above => "above",
            Regime::Below => "below",
            Regime::Gap => "gap",
        })
    }
}

/// Squared-integer test; no square roots are taken.
pub fn classify_regime(params: BallsBinsParams) -> Regime {
    let (n, b) = (params.n_balls, params.n_bins);
    if b > n && at_least_plus_sqrt(b, n) {
        Regime::Above
    } else if b < n && at_most_minus_sqrt(b, n) {
        Regime::Below
    } else {
        Regime::Gap
    }
}
