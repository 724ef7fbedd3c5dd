//! Exact integer helpers for thresholds that must not depend on floating point.

/// `ceil(lg x)` for `x >= 1`.
pub fn ceil_lg(x: u64) -> u32 {
    assert!(x >= 1);
    if x == 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// `ceil(lg lg x)` clamped below at 0: the least `t >= 0` with `x <= 2^(2^t)`.
pub fn ceil_lglg(x: u64) -> u32 {
    assert!(x >= 1);
    let mut t = 0u32;
    // x <= 2^(2^t)  <=>  ceil_lg(x) <= 2^t
    while u64::from(ceil_lg(x)) > 1u64 << t {
        t += 1;
    }
    t
}

/// `w >= m + sqrt(m)` evaluated exactly.
pub fn at_least_plus_sqrt(w: u64, m: u64) -> bool {
    if w < m {
        return false;
    }
    let d = u128::from(w - m);
    d * d >= u128::from(m)
}

/// `w <= m - sqrt(m)` evaluated exactly.
pub fn at_most_minus_sqrt(w: u64, m: u64) -> bool {
    if w > m {
        return false;
    }
    let d = u128::from(m - w);
    d * d >= u128::from(m)
}

/// `ceil(sqrt(n))`.
pub fn ceil_sqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while u128::from(r) * u128::from(r) > u128::from(n) {
        r -= 1;
    }
    while u128::from(r) * u128::from(r) < u128::from(n) {
        r += 1;
    }
    r
}

pub fn lg(x: f64) -> f64 {
    x.log2()
}
