use serde::Serialize;

use super::{classify_regime, BallsBinsParams};
use crate::error::{Error, Result};

/// `N (1 - 1/B)^(N-1)`: the mean number of singleton bins.
pub fn expected_singletons(params: BallsBinsParams) -> f64 {
    let (n, b) = (params.n_balls(), params.n_bins());
    if b == 1 {
        return if n == 1 { 1.0 } else { 0.0 };
    }
    let n = n as f64;
    n * ((n - 1.0) * (-1.0 / b as f64).ln_1p()).exp()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

fn check_mean(mean: f64) -> Result<()> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Domain(format!("mean must be positive, got {mean}")));
    }
    Ok(())
}

/// `Pr[X > (1+eps) E[X]] <= exp(-eps^2 E[X] / 3)`.
pub fn chernoff_upper_tail(epsilon: f64, mean: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_mean(mean)?;
    Ok((-epsilon * epsilon * mean / 3.0).exp())
}

/// `Pr[X < (1-eps) E[X]] <= exp(-eps^2 E[X] / 2)`.
pub fn chernoff_lower_tail(epsilon: f64, mean: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_mean(mean)?;
    Ok((-epsilon * epsilon * mean / 2.0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationBound {
    pub side: BoundSide,
    pub epsilon: f64,
    /// Singleton-count threshold.
    pub threshold: f64,
    /// Upper bound on the probability of crossing the threshold.
    pub failure_prob: f64,
}

/// Singleton-count concentration bounds outside the gap regime.
///
/// Lower: at least `(1-eps) N / e^(N/(B-1))` singletons except with
/// probability `exp(-eps^2 N / (2 e^(N/(B-1))))`. Upper: at most
/// `(1+eps) N / e^((N-1)/B)` except with probability
/// `exp(-eps^2 N / (3 e^(N/(B-1))))`.
pub fn singleton_bounds(
    params: BallsBinsParams,
    epsilon: f64,
) -> Result<(ConcentrationBound, ConcentrationBound)> {
    check_epsilon(epsilon)?;
    if classify_regime(params).is_gap() {
        return Err(Error::Regime {
            n_balls: params.n_balls(),
            n_bins: params.n_bins(),
        });
    }
    let n = params.n_balls() as f64;
    let b = params.n_bins() as f64;
    // B = 1 gives e^(N/0) = inf: threshold 0, failure bound 1.
    let growth = (n / (b - 1.0)).exp();
    let lower = ConcentrationBound {
        side: BoundSide::Lower,
        epsilon,
        threshold: (1.0 - epsilon) * n / growth,
        failure_prob: (-epsilon * epsilon * n / (2.0 * growth)).exp(),
    };
    let upper = ConcentrationBound {
        side: BoundSide::Upper,
        epsilon,
        threshold: (1.0 + epsilon) * n / ((n - 1.0) / b).exp(),
        failure_prob: (-epsilon * epsilon * n / (3.0 * growth)).exp(),
    };
    Ok((lower, upper))
}

/// `1 - m^2 / w`: all `m` packets succeed in a `w`-slot window with at
/// least this probability when `w > 2m`.
pub fn last_window_bound(m: u64, w: u64) -> Result<f64> {
    if w <= 2 * m {
        return Err(Error::Precondition(format!("need w > 2m, got m = {m}, w = {w}")));
    }
    let m = m as f64;
    Ok(1.0 - m * m / w as f64)
}

/// `sqrt(4 e ln n) / n^(1/3)`, the epsilon used to shrink the backlog
/// while it is at least `n^0.7`.
pub fn shrink_epsilon(n: u64) -> f64 {
    let n = n as f64;
    (4.0 * std::f64::consts::E * n.ln()).sqrt() / n.cbrt()
}

/// `sqrt(4 e ln^2 n / n)`, the epsilon used for Log-Log backoff's first phase.
pub fn llb_epsilon(n: u64) -> f64 {
    let n = n as f64;
    let ln = n.ln();
    (4.0 * std::f64::consts::E * ln * ln / n).sqrt()
}

/// `(e^(-x/(1-x)), 1 - x, e^(-x))` for `0 < x < 1`.
pub fn exp_sandwich(x: f64) -> Result<(f64, f64, f64)> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x must lie in (0, 1), got {x}")));
    }
    Ok(((-x / (1.0 - x)).exp(), 1.0 - x, (-x).exp()))
}
