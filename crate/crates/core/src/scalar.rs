//! Scalar abstractions shared by the label and metric code.
//!
//! Probability vectors only need ordered field arithmetic, so they work over
//! exact rationals as well as floats. Correlation needs square roots and is
//! restricted to [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// A value usable as a per-character probability: `f32`, `f64` or an exact
/// rational such as [`num_rational::Ratio<i64>`].
pub trait Prob: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync {
    /// Converts a count to this scalar.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    /// `true` when `0 <= self <= 1`. NaN is never in range.
    fn is_unit(&self) -> bool {
        *self >= Self::zero() && *self <= Self::one()
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Prob for T where T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync {}

/// Floating point probability scalar.
pub trait Real: Prob + Float {}

impl<T> Real for T where T: Prob + Float {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn unit_interval() {
        assert!(0.0f64.is_unit());
        assert!(1.0f32.is_unit());
        assert!(!f64::NAN.is_unit());
        assert!(!(-0.1f64).is_unit());
        assert!(Ratio::new(2i64, 3).is_unit());
        assert!(!Ratio::new(4i64, 3).is_unit());
    }

    #[test]
    fn counts() {
        assert_eq!(Ratio::<i64>::from_count(3), Ratio::from_integer(3));
        assert_eq!(f32::from_count(7), 7.0);
    }
}
