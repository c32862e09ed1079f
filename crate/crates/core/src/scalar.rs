//! Scalars used for masses, tail sums and spherical-function values.
//!
//! Floating types serve the Monte-Carlo paths; [`Rational`] gives exact sums
//! where a value is compared for equality.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive};

pub type Rational = BigRational;

pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync {
    fn from_ratio(num: i64, den: i64) -> Self;

    /// `s^k` for any integer `k`.
    fn s_power(s: u32, k: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn s_power(s: u32, k: i64) -> Self {
                (s as $t).powi(k as i32)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn s_power(s: u32, k: i64) -> Self {
        let base = BigInt::from(s).pow(k.unsigned_abs() as u32);
        if k >= 0 {
            BigRational::from_integer(base)
        } else {
            BigRational::new(BigInt::one(), base)
        }
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_tail<S: Scalar>(s: u32, from: i64, to: i64) -> S {
        (from..=to).fold(S::zero(), |acc, k| acc + S::s_power(s, -k))
    }

    #[test]
    fn generic_sums_agree() {
        let exact: Rational = geometric_tail(3, 1, 30);
        let approx: f64 = geometric_tail(3, 1, 30);
        let single: f32 = geometric_tail(3, 1, 30);
        assert!((Scalar::to_f64(&exact) - approx).abs() < 1e-15);
        assert!((single as f64 - approx).abs() < 1e-6);
        assert_eq!(Rational::from_ratio(6, 4), Rational::s_power(2, -1) * Rational::from_ratio(3, 1));
    }

    #[test]
    fn tiny_rationals_convert() {
        let r = Rational::s_power(3, -40) * Rational::from_ratio(7, 5);
        assert!((Scalar::to_f64(&r) / (1.4 * 3f64.powi(-40)) - 1.0).abs() < 1e-14);
        let huge = Rational::s_power(2, 900) / Rational::s_power(3, 500);
        assert!(Scalar::to_f64(&huge).is_finite());
    }
}
