//! Exact probabilities as reduced big rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::traits::{One, Pow, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A probability `p/q` in `[0, 1]`, always stored in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactProbability(BigRational);

impl ExactProbability {
    pub fn new(numerator: BigUint, denominator: BigUint) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::Domain("probability with zero denominator".into()));
        }
        if numerator > denominator {
            return Err(Error::Domain(format!(
                "probability {numerator}/{denominator} exceeds 1"
            )));
        }
        Ok(Self(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        )))
    }

    /// Convenience constructor for small values; panics outside `[0, 1]`.
    pub fn from_u64s(numerator: u64, denominator: u64) -> Self {
        Self::new(numerator.into(), denominator.into()).expect("valid probability")
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numerator(&self) -> BigUint {
        self.0.numer().to_biguint().expect("non-negative")
    }

    pub fn denominator(&self) -> BigUint {
        self.0.denom().to_biguint().expect("positive")
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn pow(&self, exponent: u32) -> Self {
        Self(Pow::pow(&self.0, exponent))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl Mul for &ExactProbability {
    type Output = ExactProbability;
    fn mul(self, rhs: Self) -> ExactProbability {
        ExactProbability(&self.0 * &rhs.0)
    }
}

impl Mul for ExactProbability {
    type Output = ExactProbability;
    fn mul(self, rhs: Self) -> ExactProbability {
        ExactProbability(self.0 * rhs.0)
    }
}

impl PartialOrd for ExactProbability {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactProbability {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

/// Always `p/q`, including `0/1` and `1/1`.
impl fmt::Display for ExactProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_on_construction() {
        let p = ExactProbability::new(6u32.into(), 12u32.into()).unwrap();
        assert_eq!(p, ExactProbability::from_u64s(1, 2));
        assert_eq!(p.to_string(), "1/2");
        assert_eq!(ExactProbability::one().to_string(), "1/1");
        assert_eq!(ExactProbability::zero().to_string(), "0/1");
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ExactProbability::new(3u32.into(), 2u32.into()).is_err());
        assert!(ExactProbability::new(0u32.into(), 0u32.into()).is_err());
    }

    #[test]
    fn ordering_and_pow() {
        let half = ExactProbability::from_u64s(1, 2);
        let quarter = half.pow(2);
        assert_eq!(quarter, ExactProbability::from_u64s(1, 4));
        assert!(half > quarter);
        assert_eq!(&half * &half, quarter);
        assert!((quarter.to_f64() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn huge_values_convert_to_f64() {
        let den = BigUint::from(7u32).pow(400u32);
        let num = BigUint::from(6u32).pow(400u32);
        let p = ExactProbability::new(num, den).unwrap();
        let expect = (400.0 * (6.0f64 / 7.0).ln()).exp();
        assert!((p.to_f64() / expect - 1.0).abs() < 1e-12);
    }
}
