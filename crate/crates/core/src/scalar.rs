//! Coefficient fields.
//!
//! Every computation runs in exactly one scalar mode: exact rationals or
//! binary64. The mode is a type parameter, so mixing the two is a compile
//! error rather than a runtime check.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational numbers with arbitrary-precision numerator and denominator.
pub type Rational = BigRational;

/// Builds `num/den` as an exact rational.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Converts an exact rational to the nearest binary64 value.
pub fn rational_to_f64(r: &Rational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Operations the polynomial algebra needs from its coefficient field.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    /// True when arithmetic is exact and zero tests are meaningful.
    const EXACT: bool;
    /// Short mode name used in reports.
    const MODE: &'static str;

    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;

    fn mul_ref(&self, other: &Self) -> Self;

    /// `self += a * b` without cloning the operands.
    fn add_product(&mut self, a: &Self, b: &Self);

    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Exact zero in rational mode, `|x| <= tol` in float mode.
    fn is_negligible(&self, tol: f64) -> bool;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn is_negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}
