//! Small regression and extrapolation helpers.

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Root-mean-square of the residuals.
    pub rms: T,
    /// Pearson correlation of the inputs.
    pub correlation: T,
}

/// Ordinary least squares `y ~ slope * x + intercept`. `None` for fewer than
/// two points or zero spread in `x`.
pub fn least_squares<T: Real>(x: &[T], y: &[T]) -> Option<LineFit<T>> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = T::from_usize_lossy(n);
    let mx = x[..n].iter().copied().sum::<T>() / nf;
    let my = y[..n].iter().copied().sum::<T>() / nf;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: T = (0..n)
        .map(|i| {
            let r = y[i] - (slope * x[i] + intercept);
            r * r
        })
        .sum();
    let correlation = if syy == T::zero() {
        T::one()
    } else {
        sxy / (sxx * syy).sqrt()
    };
    Some(LineFit {
        slope,
        intercept,
        rms: (ss / nf).sqrt(),
        correlation,
    })
}

/// Limit of a sequence sampled at geometrically spaced abscissae, assuming the
/// remainder decays geometrically from one sample to the next.
///
/// Falls back to the last value when the increments do not shrink.
pub fn geometric_limit<T: Real>(a: T, b: T, c: T) -> T {
    let d1 = b - a;
    let d2 = c - b;
    if d1 == T::zero() || d2 == T::zero() {
        return c;
    }
    let rho = d2 / d1;
    if !(rho > T::zero() && rho < T::one()) {
        return c;
    }
    c + d2 * rho / (T::one() - rho)
}
