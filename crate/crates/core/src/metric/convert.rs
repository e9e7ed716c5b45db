//! Conversions between the h, ξ and F descriptions of a metric.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, QuadratureOptions};
use crate::profile::GeneratorProfile;
use crate::scalar::Real;

/// `F' = √(ξ(2-ξ)) / (1-ξ)`, i.e. `1 + F'² = (1-ξ)^-2`.
///
/// Returns `+∞` at `ξ = 1`, where the metric leaves the class with bounded F'.
pub fn fprime_from_xi<T: Real>(xi: T) -> Result<T> {
    if !(xi >= T::zero() && xi <= T::one()) {
        return Err(Error::out_of_range("xi", xi.as_f64(), 0.0, 1.0));
    }
    if xi == T::one() {
        return Ok(T::infinity());
    }
    Ok((xi * (T::lit(2.0) - xi)).sqrt() / (T::one() - xi))
}

/// `ξ = 1 - 1/√(1+F'²)`, evaluated without cancellation; `F' = ∞` gives 1.
pub fn xi_from_fprime<T: Real>(fp: T) -> T {
    if fp.is_infinite() {
        return T::one();
    }
    let g = (T::one() + fp * fp).sqrt();
    fp * fp / (g * (g + T::one()))
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.first() != Some(&T::zero()) {
        return Err(Error::InvalidArgument("grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn opts<T: Real>() -> QuadratureOptions<T> {
    QuadratureOptions::default().with_rel_tol(T::lit(1e-12))
}

/// `∫_a^b φ(t) dt/t`: in `u = √t` on the first interval, `u = ln t` after.
fn log_measure<T: Real>(phi: impl Fn(T) -> T, a: T, b: T) -> Result<T> {
    let two = T::lit(2.0);
    let est = if a == T::zero() {
        integrate(|u: T| two * phi(u * u) / u, T::zero(), b.sqrt(), &opts())?
    } else {
        integrate(|u: T| phi(u.exp()), a.ln(), b.ln(), &opts())?
    };
    Ok(est.value)
}

/// `h(r) = h0·exp(-∫_0^r ξ(t)/t dt)` on `grid_r` (which starts at 0).
///
/// Independent of the metric builder: plain adaptive quadrature per interval.
pub fn xi_to_h<T: Real>(xi: &GeneratorProfile<T>, h0: T, grid_r: &[T]) -> Result<Vec<T>> {
    check_grid(grid_r)?;
    let mut out = Vec::with_capacity(grid_r.len());
    out.push(h0);
    let mut exponent = T::zero();
    for w in grid_r.windows(2) {
        let err = RefCell::new(None);
        let part = log_measure(
            |t| {
                xi.eval(t).unwrap_or_else(|e| {
                    err.borrow_mut().get_or_insert(e);
                    T::zero()
                })
            },
            w[0],
            w[1],
        )?;
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        exponent = exponent + part;
        out.push(h0 * (-exponent).exp());
    }
    Ok(out)
}

/// `f(r) = (1/r)∫_0^r h(t) dt` on `grid_r`, with `f(0) = h(0)`.
pub fn h_to_f<T: Real>(h: impl Fn(T) -> T, grid_r: &[T]) -> Result<Vec<T>> {
    check_grid(grid_r)?;
    let mut out = Vec::with_capacity(grid_r.len());
    out.push(h(T::zero()));
    let mut acc = T::zero();
    for w in grid_r.windows(2) {
        acc = acc + log_measure(|t| t * h(t), w[0], w[1])?;
        out.push(acc / w[1]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_spaced;
    use crate::profile::ProfileKind;

    #[test]
    fn fprime_examples() {
        assert_eq!(fprime_from_xi(0.0).unwrap(), 0.0);
        assert!((fprime_from_xi(0.5).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!(fprime_from_xi(1.0f64).unwrap().is_infinite());
        assert!(fprime_from_xi(1.0 - 1e-12).unwrap() > 1e5);
        assert!(fprime_from_xi(1.5).is_err());
        assert_eq!(xi_from_fprime(0.0), 0.0);
        assert!((xi_from_fprime(3f64.sqrt()) - 0.5).abs() < 1e-15);
        assert_eq!(xi_from_fprime(f64::INFINITY), 1.0);
    }

    #[test]
    fn h_of_rational_xi() {
        let p = GeneratorProfile::<f64>::parse(ProfileKind::Xi, "t/(1+t)").unwrap();
        let mut grid = vec![0.0];
        grid.extend(log_spaced(1e-6, 1e6, 60));
        let h = xi_to_h(&p, 1.0, &grid).unwrap();
        for (r, h) in grid.iter().zip(&h) {
            assert!((h * (1.0 + r) - 1.0).abs() < 1e-11, "{r}");
        }
        let f = h_to_f(|t: f64| 1.0 / (1.0 + t), &grid).unwrap();
        assert_eq!(f[0], 1.0);
        for (r, f) in grid.iter().zip(&f).skip(1) {
            assert!((f / (r.ln_1p() / r) - 1.0).abs() < 1e-11, "{r}");
        }
    }

    #[test]
    fn flat_conversions() {
        let p = GeneratorProfile::<f64>::parse(ProfileKind::Xi, "0").unwrap();
        let grid = [0.0, 0.5, 1.0, 10.0];
        assert_eq!(xi_to_h(&p, 1.0, &grid).unwrap(), vec![1.0; 4]);
        let f = h_to_f(|_| 1.0, &grid).unwrap();
        assert!(f.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(xi_to_h(&p, 1.0, &[0.5, 1.0]).is_err());
    }
}
