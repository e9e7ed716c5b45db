//! Scalar abstractions.
//!
//! Numerical routines (quadrature, interpolation, metric construction) are
//! generic over [`Real`], implemented for `f32` and `f64`. The pure curvature
//! algebra only needs ring operations plus division by small integers and is
//! generic over [`Algebra`], which also admits exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, One, ToPrimitive, Zero};

/// Floating point scalar used by every numerical routine.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless for `f64`, rounding for `f32`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest relative tolerance that is meaningful for this type.
    fn tol_floor() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Commutative ring with division by nonzero integers.
///
/// Implemented for floats as well as `num_rational::Ratio` so that closed
/// forms can be compared exactly against enumeration oracles.
pub trait Algebra:
    Clone
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + FromPrimitive
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    fn powi(&self, k: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }
}

impl<T> Algebra for T where
    T: Clone
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + FromPrimitive
{
}

/// Binomial coefficient as an exact integer; `0` when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Euclidean volume of the unit ball in C^n, pi^n / n!.
pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    let mut acc = T::one();
    for i in 1..=n {
        acc = acc * T::PI() / T::from_usize_lossy(i);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(6, 0), 1);
        assert_eq!(binomial(6, 6), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(10, 3), 120);
    }

    #[test]
    fn ball_volume() {
        let c2: f64 = unit_ball_volume(2);
        assert!((c2 - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-15);
        let c1: f32 = unit_ball_volume(1);
        assert!((c1 - std::f32::consts::PI).abs() < 1e-6);
    }
}
