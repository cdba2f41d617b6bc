//! Floating-point scalar used by the numeric engine.
//!
//! The modelling language works on exact rationals ([`crate::Rational`]);
//! everything downstream of state-space construction is generic over a
//! [`Scalar`], which in practice is `f64` (and `f32` for memory-bound runs).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use crate::Rational;

/// floating point: f32 or f64
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Nearest representable value of an exact rational.
    fn from_rational(r: &Rational) -> Self {
        Self::from_f64(r.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
