//! Scalar abstraction shared by every numerical module.
//!
//! The measure, LP, MOT and adapted-distance code is written once against
//! [`Scalar`] and instantiated for `f64` (the working type), `f32`, and
//! [`BigRational`] for exact cross-checks on small instances.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Ordered field used by the solvers.
///
/// Floating types map an absolute tolerance onto something representable;
/// exact types compare exactly and every tolerance collapses to zero.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Absolute tolerance `t` expressed in this type.
    fn tol(t: f64) -> Self;

    fn is_finite_value(&self) -> bool;

    /// Conversion from a double. Panics only on non-finite input, which
    /// every public entry point rejects beforehand.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(|| panic!("non-finite scalar {v}"))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits every scalar type")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tol(t: f64) -> Self {
        t
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn tol(t: f64) -> Self {
        // tolerances tuned for doubles are below single precision resolution
        (t as f32).max(64.0 * f32::EPSILON)
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn tol(_t: f64) -> Self {
        BigRational::zero()
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Exact rational from a decimal ratio, handy in tests and fixtures.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `Σ a_k` without requiring `Copy`.
pub(crate) fn sum<'a, T: Scalar>(items: impl IntoIterator<Item = &'a T>) -> T {
    items.into_iter().fold(T::zero(), |acc, v| acc + v.clone())
}

/// Largest absolute value in a slice, zero when empty.
pub(crate) fn max_abs<'a, T: Scalar>(items: impl IntoIterator<Item = &'a T>) -> T {
    items.into_iter().fold(T::zero(), |acc, v| acc.max_of(v.abs()))
}
