//! Monotone piecewise cubic Hermite interpolation (Fritsch-Butland slopes).
//!
//! Monotone data produce a monotone interpolant and the curve never leaves the
//! range spanned by neighbouring samples.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Pchip<T> {
    x: Vec<T>,
    y: Vec<T>,
    d: Vec<T>,
}

impl<T: Real> Pchip<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidProfile(
                "interpolation needs at least two (t, value) pairs".into(),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "sample abscissae must be strictly increasing".into(),
            ));
        }
        let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![T::zero(); n];
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        for k in 1..n - 1 {
            let (s1, s2) = (delta[k - 1], delta[k]);
            if s1 == T::zero() || s2 == T::zero() || s1.signum() != s2.signum() {
                continue;
            }
            let w1 = two * h[k] + h[k - 1];
            let w2 = h[k] + two * h[k - 1];
            d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
        }
        let end_slope = |h0: T, h1: T, s0: T, s1: T| {
            let mut d0 = ((two * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if d0.signum() != s0.signum() || s0 == T::zero() {
                d0 = T::zero();
            } else if s0.signum() != s1.signum() && d0.abs() > three * s0.abs() {
                d0 = three * s0;
            }
            d0
        };
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn knots(&self) -> &[T] {
        &self.x
    }

    pub fn values(&self) -> &[T] {
        &self.y
    }

    pub fn domain(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn locate(&self, t: T) -> Result<usize> {
        let (lo, hi) = self.domain();
        if t > hi {
            return Err(Error::Extrapolation {
                t: t.as_f64(),
                end: hi.as_f64(),
            });
        }
        if t < lo || t.is_nan() {
            return Err(Error::Domain {
                what: "evaluation before first sample",
                at: t.as_f64(),
            });
        }
        let i = self.x.partition_point(|&k| k <= t);
        Ok(i.saturating_sub(1).min(self.x.len() - 2))
    }

    /// Value, first and second derivative at `t`.
    pub fn eval_jet(&self, t: T) -> Result<(T, T, T)> {
        let i = self.locate(t)?;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let six = T::lit(6.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + one;
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dh00 = six * s2 - six * s;
        let dh10 = three * s2 - T::lit(4.0) * s + one;
        let dh01 = six * s - six * s2;
        let dh11 = three * s2 - two * s;
        let first = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        let ddh00 = T::lit(12.0) * s - six;
        let ddh10 = six * s - T::lit(4.0);
        let ddh01 = six - T::lit(12.0) * s;
        let ddh11 = six * s - two;
        let second = (ddh00 * y0 + ddh10 * d0 + ddh01 * y1 + ddh11 * d1) / (h * h);
        Ok((value, first, second))
    }

    pub fn eval(&self, t: T) -> Result<T> {
        self.eval_jet(t).map(|j| j.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_knots() {
        let p = Pchip::new(vec![0.0f64, 1.0, 2.0], vec![0.0, 0.5, 0.8]).unwrap();
        assert_eq!(p.eval(1.0).unwrap(), 0.5);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert!((p.eval(2.0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn no_overshoot_on_plateau() {
        let p = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        for i in 0..=300 {
            let v = p.eval(i as f64 / 100.0).unwrap();
            assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        }
    }

    #[test]
    fn extrapolation_is_an_error() {
        let p = Pchip::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(p.eval(1.5), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn rejects_unsorted() {
        assert!(Pchip::new(vec![0.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
    }
}
