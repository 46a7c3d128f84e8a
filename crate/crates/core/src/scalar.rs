//! Number types the primal-dual state machines are generic over.
//!
//! Golden traces run on [`BigRational`] so that values such as `2/5` compare
//! exactly; long simulations run on `f64`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};

/// Tolerance for `f64` comparisons against integer boundaries.
pub const FLOAT_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(n: u64) -> Self;
    fn from_ratio(r: Rational64) -> Self;
    fn to_f64(&self) -> f64;

    /// `self < 1`, exact for rationals and `1 - 1e-12` for floats.
    fn below_one(&self) -> bool;

    /// `self < other`; floats treat values within tolerance as equal.
    fn strictly_less(&self, other: &Self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn from_ratio(r: Rational64) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn below_one(&self) -> bool {
        *self < 1.0 - FLOAT_TOL
    }
    fn strictly_less(&self, other: &Self) -> bool {
        *self < *other - FLOAT_TOL
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_ratio(r: Rational64) -> Self {
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn below_one(&self) -> bool {
        *self < <Self as Scalar>::one()
    }
    fn strictly_less(&self, other: &Self) -> bool {
        self < other
    }
}

/// Builds an exact rational from a numerator and denominator.
pub fn big_ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
