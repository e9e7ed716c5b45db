//! Numerical building blocks shared by every module.

pub mod chebyshev;
pub mod finite_difference;
pub mod fit;
pub mod pchip;
pub mod quadrature;

use crate::scalar::Real;

/// `n` points log-spaced on `[lo, hi]` (both included).
pub fn log_spaced<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(lo > T::zero() && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::from_usize_lossy(n - 1);
    let mut out: Vec<T> = (0..n).map(|i| (a + step * T::from_usize_lossy(i)).exp()).collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// Quintic smoothstep `6u^5 - 15u^4 + 10u^3`, clamped to `[0, 1]`.
pub fn smoothstep<T: Real>(u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::one();
    }
    u * u * u * (T::lit(10.0) + u * (T::lit(-15.0) + u * T::lit(6.0)))
}

/// First and second derivative of [`smoothstep`].
pub fn smoothstep_derivatives<T: Real>(u: T) -> (T, T) {
    if u <= T::zero() || u >= T::one() {
        return (T::zero(), T::zero());
    }
    let one_minus = T::one() - u;
    let d1 = T::lit(30.0) * u * u * one_minus * one_minus;
    let d2 = T::lit(60.0) * u * one_minus * (T::one() - T::lit(2.0) * u);
    (d1, d2)
}

/// `\int_0^u smoothstep`, i.e. `u^6 - 3u^5 + 2.5u^4` on `[0, 1]`.
pub fn smoothstep_integral<T: Real>(u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::lit(0.5) + (u - T::one());
    }
    u * u * u * u * (T::lit(2.5) + u * (T::lit(-3.0) + u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing() {
        let g = log_spaced(1e-2f64, 1e2, 5);
        for (a, b) in g.iter().zip([1e-2, 1e-1, 1.0, 1e1, 1e2]) {
            assert!((a / b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5f64) - 0.5).abs() < 1e-15);
        assert!((smoothstep_integral(1.0f64) - 0.5).abs() < 1e-15);
        // derivative check by central differences
        let u = 0.3f64;
        let h = 1e-6;
        let fd = (smoothstep(u + h) - smoothstep(u - h)) / (2.0 * h);
        assert!((fd - smoothstep_derivatives(u).0).abs() < 1e-8);
        let fi = (smoothstep_integral(u + h) - smoothstep_integral(u - h)) / (2.0 * h);
        assert!((fi - smoothstep(u)).abs() < 1e-8);
    }
}
