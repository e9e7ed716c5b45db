//! Spectral integration on a single interval.
//!
//! An integrand is sampled at the Chebyshev-Lobatto points of `[a, b]`,
//! converted to a Chebyshev series and integrated term by term. The resulting
//! antiderivative can be evaluated anywhere in the interval, which is what
//! gives the metric tables their dense output.

use crate::scalar::Real;

/// Samples per interval (polynomial degree 16).
pub const POINTS: usize = 17;
const DEG: usize = POINTS - 1;

/// `cos(pi * j / DEG)` for `j = 0..2*DEG`.
fn cos_table<T: Real>() -> [T; 2 * DEG] {
    let mut out = [T::zero(); 2 * DEG];
    for (j, c) in out.iter_mut().enumerate() {
        *c = (T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(DEG)).cos();
    }
    out
}

/// Lobatto nodes of `[a, b]`, ordered from `b` down to `a`.
pub fn nodes<T: Real>(a: T, b: T) -> [T; POINTS] {
    let table = cos_table::<T>();
    let half = T::lit(0.5);
    let mid = half * (a + b);
    let rad = half * (b - a);
    let mut out = [T::zero(); POINTS];
    for (j, w) in out.iter_mut().enumerate() {
        *w = mid + rad * table[j];
    }
    out[0] = b;
    out[DEG] = a;
    out
}

/// Chebyshev coefficients of the interpolant through values at [`nodes`].
pub fn coefficients<T: Real>(values: &[T; POINTS]) -> [T; POINTS] {
    let table = cos_table::<T>();
    let two = T::lit(2.0);
    let mut c = [T::zero(); POINTS];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (j, &v) in values.iter().enumerate() {
            let w = if j == 0 || j == DEG { T::lit(0.5) } else { T::one() };
            acc = acc + w * v * table[(j * k) % (2 * DEG)];
        }
        *ck = two * acc / T::from_usize_lossy(DEG);
    }
    c[0] = c[0] * T::lit(0.5);
    c[DEG] = c[DEG] * T::lit(0.5);
    c
}

/// Size of the two highest coefficients relative to the series' scale.
pub fn tail_ratio<T: Real>(c: &[T; POINTS]) -> T {
    let scale = c.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    (c[DEG].abs() + c[DEG - 1].abs()) / scale
}

/// Antiderivative of a Chebyshev series on `[a, b]`, zero at `a`.
#[derive(Clone, Debug)]
pub struct Antiderivative<T> {
    a: T,
    b: T,
    coeffs: [T; POINTS + 1],
}

impl<T: Real> Antiderivative<T> {
    pub fn from_coefficients(a: T, b: T, c: &[T; POINTS]) -> Self {
        let rad = T::lit(0.5) * (b - a);
        let mut out = [T::zero(); POINTS + 1];
        let get = |k: usize| if k < POINTS { c[k] } else { T::zero() };
        #[allow(clippy::needless_range_loop)]
        for k in 1..=POINTS {
            let prev = if k == 1 { get(0) * T::lit(2.0) } else { get(k - 1) };
            out[k] = rad * (prev - get(k + 1)) / T::from_usize_lossy(2 * k);
        }
        // value at t = -1 is sum (-1)^k C_k; choose C_0 to cancel it
        let mut at_left = T::zero();
        for (k, &ck) in out.iter().enumerate().skip(1) {
            at_left = if k % 2 == 0 { at_left + ck } else { at_left - ck };
        }
        out[0] = -at_left;
        Self { a, b, coeffs: out }
    }

    pub fn from_samples(a: T, b: T, values: &[T; POINTS]) -> Self {
        Self::from_coefficients(a, b, &coefficients(values))
    }

    pub fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }

    pub fn eval(&self, w: T) -> T {
        if w == self.a {
            return T::zero();
        }
        let t = (T::lit(2.0) * w - self.a - self.b) / (self.b - self.a);
        clenshaw(&self.coeffs, t)
    }

    /// Integral over the full interval.
    pub fn total(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, &c| acc + c)
    }
}

fn clenshaw<T: Real>(c: &[T], t: T) -> T {
    let two_t = t + t;
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + two_t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> [f64; POINTS] {
        let mut v = [0.0; POINTS];
        for (x, out) in nodes(a, b).iter().zip(v.iter_mut()) {
            *out = f(*x);
        }
        v
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let (a, b) = (0.5, 2.0);
        let anti = Antiderivative::from_samples(a, b, &sample(a, b, |x| 3.0 * x * x - x));
        let exact = |x: f64| x.powi(3) - 0.5 * x * x - (a.powi(3) - 0.5 * a * a);
        for &w in &[0.5, 0.7, 1.1, 1.9, 2.0] {
            assert!((anti.eval(w) - exact(w)).abs() < 1e-13, "{w}");
        }
        assert!((anti.total() - exact(b)).abs() < 1e-13);
    }

    #[test]
    fn smooth_function_spectral_accuracy() {
        let (a, b) = (0.0, 0.3);
        let c = coefficients(&sample(a, b, f64::exp));
        assert!(tail_ratio(&c) < 1e-15);
        let anti = Antiderivative::from_coefficients(a, b, &c);
        assert!((anti.eval(0.17) - (0.17f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn kink_shows_in_tail() {
        let c = coefficients(&sample(-1.0, 1.0, |x: f64| x.abs()));
        assert!(tail_ratio(&c) > 1e-4);
    }
}
