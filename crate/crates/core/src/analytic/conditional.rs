use num::bigint::BigUint;
use num::traits::Pow;

use super::BallsBinsParams;
use crate::error::{Error, Result};
use crate::exact::ExactProbability;

fn check_index(params: BallsBinsParams, j: u64) -> Result<()> {
    if j >= params.n_bins() {
        return Err(Error::Domain(format!(
            "P_j needs 0 <= j <= B-1 = {}, got j = {j}",
            params.n_bins() - 1
        )));
    }
    Ok(())
}

/// `ln P_j`; `-inf` when `P_j = 0`.
pub fn ln_cond_prob_pj(params: BallsBinsParams, j: u64) -> Result<f64> {
    check_index(params, j)?;
    let (n, b) = (params.n_balls(), params.n_bins());
    if j >= n {
        return Ok(f64::NEG_INFINITY);
    }
    let balls = (n - j) as f64;
    let bins = (b - j) as f64;
    let exponent = (n - j - 1) as f64;
    let power = if exponent == 0.0 {
        0.0
    } else if b - j == 1 {
        // (1 - 1/1)^k with k > 0
        return Ok(f64::NEG_INFINITY);
    } else {
        exponent * (-1.0 / bins).ln_1p()
    };
    Ok(balls.ln() - bins.ln() + power)
}

/// `P_j = (N-j) (1/(B-j)) (1 - 1/(B-j))^(N-j-1)`, zero once `j >= N`.
pub fn cond_prob_pj(params: BallsBinsParams, j: u64) -> Result<f64> {
    Ok(ln_cond_prob_pj(params, j)?.exp())
}

/// Exact rational `P_j = (N-j) (B-j-1)^(N-j-1) / (B-j)^(N-j)`.
pub fn cond_prob_pj_exact(params: BallsBinsParams, j: u64) -> Result<ExactProbability> {
    check_index(params, j)?;
    let (n, b) = (params.n_balls(), params.n_bins());
    if j >= n {
        return Ok(ExactProbability::zero());
    }
    let balls = n - j;
    let bins = b - j;
    let exponent = u32::try_from(balls - 1)
        .map_err(|_| Error::Domain("exponent too large for exact evaluation".into()))?;
    let num = BigUint::from(balls) * Pow::pow(BigUint::from(bins - 1), exponent);
    let den = Pow::pow(BigUint::from(bins), exponent + 1);
    ExactProbability::new(num, den)
}

fn check_ratio_index(params: BallsBinsParams, j: u64) -> Result<()> {
    let limit = params.max_singletons();
    if limit < 2 || j > limit - 2 {
        return Err(Error::Domain(format!(
            "ratio needs 0 <= j <= min(B,N)-2, got j = {j} with min(B,N) = {limit}"
        )));
    }
    Ok(())
}

/// `P_j / P_{j+1}` as a difference of logs.
pub fn pj_ratio_direct(params: BallsBinsParams, j: u64) -> Result<f64> {
    check_ratio_index(params, j)?;
    let next = ln_cond_prob_pj(params, j + 1)?;
    if next == f64::NEG_INFINITY {
        return Err(Error::DegenerateRatio { j });
    }
    Ok((ln_cond_prob_pj(params, j)? - next).exp())
}

/// `P_j / P_{j+1}` through its binomial expansion in `a = N - j`,
/// `y = B - N`:
///
/// `1 + (y^2 - a)/((a+y)^2 (a-1)) + a(a+y-2)/((a-1)(a+y)) * sum_{k=2}^{a-1} C(a-1,k) x^k`
///
/// with `x = 1/((a+y)(a+y-2))`. The tail sum is accumulated in log space.
pub fn pj_ratio_expansion(params: BallsBinsParams, j: u64) -> Result<f64> {
    check_ratio_index(params, j)?;
    let a = params.n_balls() - j;
    if a < 2 {
        return Err(Error::Domain(format!("expansion needs a = N-j >= 2, got {a}")));
    }
    // a + y = B - j >= 2 throughout the valid range.
    let bins = params.n_bins() - j;
    let af = a as f64;
    let y = params.n_bins() as f64 - params.n_balls() as f64;
    let s = bins as f64;

    let second = (y * y - af) / (s * s * (af - 1.0));

    let third = if a == 2 {
        0.0
    } else if bins == 2 {
        // x is infinite and the tail sum non-empty: P_{j+1} = 0.
        return Err(Error::DegenerateRatio { j });
    } else {
        let ln_x = -(s.ln() + (s - 2.0).ln());
        // log C(a-1, k) x^k, built up from k = 1.
        let mut ln_term = (af - 1.0).ln() + ln_x;
        let mut logs = Vec::with_capacity(a as usize);
        for k in 2..a {
            let kf = k as f64;
            ln_term += ((af - kf) / kf).ln() + ln_x;
            logs.push(ln_term);
        }
        let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scaled = neumaier_sum(logs.iter().map(|l| (l - peak).exp()));
        let ln_sum = peak + scaled.ln();
        let ln_factor = af.ln() + (s - 2.0).ln() - (af - 1.0).ln() - s.ln();
        (ln_sum + ln_factor).exp()
    };
    Ok(1.0 + second + third)
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Monotone,
    ViolatedAt(u64),
}

/// Checks `P_j >= P_{j+1} - 1e-12 * P_j` for `j = 0..=min(B,N)-2`.
pub fn check_pj_monotone(params: BallsBinsParams) -> Monotonicity {
    let limit = params.max_singletons();
    if limit < 2 {
        return Monotonicity::Monotone;
    }
    let mut current = cond_prob_pj(params, 0).expect("j = 0 is valid");
    for j in 0..=limit - 2 {
        let next = cond_prob_pj(params, j + 1).expect("j + 1 < B");
        if current < next - 1e-12 * current {
            return Monotonicity::ViolatedAt(j);
        }
        current = next;
    }
    Monotonicity::Monotone
}
