//! Scalar abstraction for the closed-form rate formulas.
//!
//! Every bound and the stage recurrence are written once against [`Scalar`]
//! and instantiated with exact rationals for reports and with `f64` for the
//! large plotting sweeps.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug {
    fn from_count(v: u64) -> Self {
        Self::from_u64(v).expect("count representable in scalar")
    }

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    /// `1 / base^exp`.
    fn inv_pow(base: u64, exp: usize) -> Self {
        Self::one() / num_traits::pow(Self::from_count(base), exp)
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

/// Renders an exact rational the way rates are usually quoted: `p/q (decimal)`.
pub fn fmt_rational(r: &BigRational) -> String {
    let dec = r.to_f64().unwrap_or(f64::NAN);
    if r.denom() == &BigInt::from(1) {
        format!("{} ({dec:.6})", r.numer())
    } else {
        format!("{}/{} ({dec:.6})", r.numer(), r.denom())
    }
}

/// Builds `num/den` as an exact rational.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
