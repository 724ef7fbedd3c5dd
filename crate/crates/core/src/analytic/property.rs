use num::bigint::BigUint;
use num::traits::{One, Pow};
use serde::Serialize;

use super::BallsBinsParams;
use crate::error::{Error, Result};
use crate::exact::ExactProbability;

/// `Pr[bin j is a singleton] = N (B-1)^(N-1) / B^N`, identical for every bin.
pub fn singleton_marginal_exact(params: BallsBinsParams) -> ExactProbability {
    joint_singleton_prob_closed(params, 1).expect("s = 1 <= B")
}

fn exponent(x: u64) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::Domain(format!("exponent {x} too large for exact evaluation")))
}

/// Probability that `s` designated bins are all singletons:
/// `N (N-1) ... (N-s+1) (B-s)^(N-s) / B^N`, and 0 when `s > N`.
pub fn joint_singleton_prob_closed(params: BallsBinsParams, s: u64) -> Result<ExactProbability> {
    let (n, b) = (params.n_balls(), params.n_bins());
    if s == 0 {
        return Err(Error::Domain("subset size s must be >= 1".into()));
    }
    if s > b {
        return Err(Error::Domain(format!("subset size s = {s} exceeds B = {b}")));
    }
    if s > n {
        return Ok(ExactProbability::zero());
    }
    let falling: BigUint = (n - s + 1..=n).map(BigUint::from).product();
    let rest = Pow::pow(BigUint::from(b - s), exponent(n - s)?);
    let total = Pow::pow(BigUint::from(b), exponent(n)?);
    ExactProbability::new(falling * rest, total)
}

/// `Pr[all m balls land in distinct bins] = w (w-1) ... (w-m+1) / w^m`.
pub fn all_distinct_prob_closed(m: u64, w: u64) -> Result<ExactProbability> {
    if w == 0 {
        return Err(Error::invalid("w", "must be >= 1"));
    }
    if m > w {
        return Ok(ExactProbability::zero());
    }
    let falling: BigUint = (w - m + 1..=w).map(BigUint::from).product::<BigUint>();
    let falling = if m == 0 { BigUint::one() } else { falling };
    ExactProbability::new(falling, Pow::pow(BigUint::from(w), exponent(m)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Property1Check {
    pub s: u64,
    #[serde(serialize_with = "ser_display")]
    pub joint: ExactProbability,
    #[serde(serialize_with = "ser_display")]
    pub product: ExactProbability,
    pub holds: bool,
}

fn ser_display<S: serde::Serializer>(p: &ExactProbability, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(p)
}

impl std::fmt::Display for Property1Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.holds {
            write!(f, "s={} holds {} <= {}", self.s, self.joint, self.product)
        } else {
            write!(f, "s={} VIOLATED {} > {}", self.s, self.joint, self.product)
        }
    }
}

/// Compares the joint singleton probability of `s` bins with `P_0^s` for
/// every `s` in `1..=max_s`.
///
/// Bins are exchangeable, so the canonical subset `{0, .., s-1}` stands for
/// every subset of size `s`.
pub fn check_property1(params: BallsBinsParams, max_s: u64) -> Result<Vec<Property1Check>> {
    if max_s == 0 || max_s > params.n_bins() {
        return Err(Error::invalid(
            "max_s",
            format!("must satisfy 1 <= max_s <= B = {}", params.n_bins()),
        ));
    }
    let marginal = singleton_marginal_exact(params);
    let mut product = ExactProbability::one();
    let mut out = Vec::with_capacity(max_s as usize);
    for s in 1..=max_s {
        product = &product * &marginal;
        let joint = joint_singleton_prob_closed(params, s)?;
        out.push(Property1Check {
            s,
            holds: joint <= product,
            joint,
            product: product.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{classify_regime, cond_prob_pj, cond_prob_pj_exact, Regime};
    use crate::ballsbins::{enumerate_joint_singleton_prob, Enumerator};
    use proptest::prelude::*;

    fn p(n: u64, b: u64) -> BallsBinsParams {
        BallsBinsParams::new(n, b).unwrap()
    }

    #[test]
    fn joint_examples() {
        assert_eq!(joint_singleton_prob_closed(p(2, 2), 2).unwrap(), ExactProbability::from_u64s(1, 2));
        assert!(joint_singleton_prob_closed(p(3, 10), 4).unwrap().is_zero());
        assert_eq!(joint_singleton_prob_closed(p(3, 5), 1).unwrap(), ExactProbability::from_u64s(48, 125));
        assert!(joint_singleton_prob_closed(p(3, 5), 6).is_err());
    }

    #[test]
    fn property1_examples() {
        let checks = check_property1(p(2, 2), 2).unwrap();
        assert!(checks[0].holds);
        assert!(!checks[1].holds);
        assert_eq!(checks[1].to_string(), "s=2 VIOLATED 1/2 > 1/4");

        assert!(check_property1(p(4, 7), 4).unwrap().iter().all(|c| c.holds));

        let single = check_property1(p(1, 2), 1).unwrap();
        assert!(single[0].holds);
        assert_eq!(single[0].joint, single[0].product);

        assert!(check_property1(p(3, 3), 4).is_err());
        assert!(check_property1(p(3, 3), 0).is_err());
    }

    #[test]
    fn closed_form_matches_enumeration_small_grid() {
        let e = Enumerator::default();
        for n in 1..=6u64 {
            for b in 1..=8u64 {
                for s in 1..=n.min(b) {
                    let subset: Vec<u64> = (0..s).collect();
                    assert_eq!(
                        enumerate_joint_singleton_prob(n, b, &subset, &e).unwrap(),
                        joint_singleton_prob_closed(p(n, b), s).unwrap(),
                        "n={n} b={b} s={s}"
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_subset_matches_every_subset() {
        let e = Enumerator::default();
        for (n, b) in [(3u64, 5u64), (4, 4), (5, 8), (6, 3)] {
            for mask in 1u32..(1 << b) {
                let subset: Vec<u64> = (0..b).filter(|j| mask & (1 << j) != 0).collect();
                let s = subset.len() as u64;
                assert_eq!(
                    enumerate_joint_singleton_prob(n, b, &subset, &e).unwrap(),
                    joint_singleton_prob_closed(p(n, b), s).unwrap()
                );
            }
        }
    }

    #[test]
    fn telescoping_product_of_conditionals() {
        for (n, b) in [(5u64, 9u64), (12, 20), (30, 25), (7, 7)] {
            let params = p(n, b);
            let mut exact = ExactProbability::one();
            let mut real = 1.0f64;
            for s in 1..=params.max_singletons() {
                exact = &exact * &cond_prob_pj_exact(params, s - 1).unwrap();
                real *= cond_prob_pj(params, s - 1).unwrap();
                let closed = joint_singleton_prob_closed(params, s).unwrap();
                assert_eq!(exact, closed, "n={n} b={b} s={s}");
                let c = closed.to_f64();
                if c > 0.0 {
                    assert!((real / c - 1.0).abs() < 1e-10, "n={n} b={b} s={s}");
                }
            }
        }
    }

    #[test]
    fn property1_grid_outside_gap() {
        for n in 1..=50u64 {
            for b in (1..=(2 * n + 10)).step_by(if n > 20 { 3 } else { 1 }) {
                let params = p(n, b);
                if classify_regime(params) == Regime::Gap {
                    continue;
                }
                let checks = check_property1(params, params.max_singletons()).unwrap();
                assert!(checks.iter().all(|c| c.holds), "n={n} b={b}");
            }
        }
    }

    #[test]
    fn all_distinct_closed_values() {
        assert_eq!(all_distinct_prob_closed(2, 5).unwrap(), ExactProbability::from_u64s(20, 25));
        assert_eq!(all_distinct_prob_closed(0, 5).unwrap(), ExactProbability::one());
        assert!(all_distinct_prob_closed(6, 5).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn marginals_sum_to_expected(n in 1u64..40, b in 1u64..60) {
            let params = p(n, b);
            let sum = singleton_marginal_exact(params).to_f64() * b as f64;
            let expected = crate::analytic::expected_singletons(params);
            prop_assert!((sum - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}
