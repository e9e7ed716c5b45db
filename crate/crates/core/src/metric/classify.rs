//! Tail classification: flat, S₁ (ξ∞ < 1), S₂ (ξ → 1 unattained), S₃ (ξ = 1
//! from a finite radius on).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::fit::geometric_limit;
use crate::scalar::Real;

use super::{xi_of, MetricModel, Repr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricClass {
    Flat,
    S1,
    S2,
    S3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeGrowth {
    Euclidean,
    SubEuclidean,
    HalfEuclidean,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassificationResult<T> {
    pub class: MetricClass,
    pub xi_infinity: T,
    pub x0: T,
    pub r0: T,
    pub volume_growth: VolumeGrowth,
    /// Tail estimate fell in the undecidable band or outside `[0, 1]`.
    pub ambiguous: bool,
}

const FLAT: f64 = 1e-10;
const S3_BAND: f64 = 1e-9;
const S1_BAND: f64 = 1e-6;

/// Limit of a geometrically converging triple, `None` if it does not converge.
fn converging_limit<T: Real>(a: T, b: T, c: T) -> Option<T> {
    let d1 = b - a;
    let d2 = c - b;
    let scale = T::one() + c.abs();
    if d2.abs() <= T::lit(1e-12) * scale {
        return Some(c);
    }
    if d1 != T::zero() && d2 / d1 > T::zero() && d2 / d1 <= T::lit(0.5) {
        return Some(geometric_limit(a, b, c));
    }
    None
}

pub fn classify<T: Real>(m: &MetricModel<T>) -> Result<ClassificationResult<T>> {
    let states = m.grid_states();
    let sup = states.iter().fold(T::zero(), |acc, s| acc.max(s.xi));
    let inf = T::infinity();
    if sup <= T::lit(FLAT) {
        return Ok(ClassificationResult {
            class: MetricClass::Flat,
            xi_infinity: T::zero(),
            x0: inf,
            r0: inf,
            volume_growth: VolumeGrowth::Euclidean,
            ambiguous: false,
        });
    }
    let one = T::one();
    let band = T::lit(S3_BAND);
    let on_one = |xi: T| xi >= one - band && xi <= one + band;
    if m.repr() != Repr::FromF && states.last().is_some_and(|s| on_one(s.xi)) {
        let first = states.iter().rposition(|s| !on_one(s.xi)).map_or(0, |i| i + 1);
        let r0 = refine_r0(m, &states, first)?;
        let st = m.state_at_r(r0)?;
        return Ok(ClassificationResult {
            class: MetricClass::S3,
            xi_infinity: one,
            x0: (st.r * st.h).sqrt(),
            r0,
            volume_growth: VolumeGrowth::HalfEuclidean,
            ambiguous: false,
        });
    }
    let decades = [T::lit(0.01), T::lit(0.1), one];
    let xi_infinity = match m.repr() {
        Repr::FromF => {
            let x_end = m.x_end();
            let fp: Vec<T> = decades
                .iter()
                .map(|d| m.state_at_x(x_end * *d).map(|s| s.fprime))
                .collect::<Result<_>>()?;
            let limit = m
                .fprime_analytic_limit()
                .or_else(|| converging_limit(fp[0], fp[1], fp[2]));
            limit.map_or(one, super::xi_from_fprime)
        }
        _ => {
            let r_end = m.r_end();
            let xi: Vec<T> = decades
                .iter()
                .map(|d| xi_of(m.profile(), r_end * *d).map(|p| p.0))
                .collect::<Result<_>>()?;
            geometric_limit(xi[0], xi[1], xi[2])
        }
    };
    if xi_infinity < one - T::lit(S1_BAND) {
        return Ok(ClassificationResult {
            class: MetricClass::S1,
            xi_infinity,
            x0: inf,
            r0: inf,
            volume_growth: VolumeGrowth::Euclidean,
            ambiguous: false,
        });
    }
    let x0 = match m.repr() {
        Repr::FromF => inf,
        _ => {
            let r_end = m.r_end();
            let x2: Vec<T> = decades
                .iter()
                .map(|d| m.state_at_r(r_end * *d).map(|s| s.x * s.x))
                .collect::<Result<_>>()?;
            converging_limit(x2[0], x2[1], x2[2]).map_or(inf, T::sqrt)
        }
    };
    Ok(ClassificationResult {
        class: MetricClass::S2,
        xi_infinity,
        x0,
        r0: inf,
        volume_growth: VolumeGrowth::SubEuclidean,
        ambiguous: xi_infinity < one - band || xi_infinity > one + band,
    })
}

/// Smallest radius where ξ is 1 to working precision, searched from the
/// first grid point of the terminal ξ ≈ 1 run.
fn refine_r0<T: Real>(m: &MetricModel<T>, states: &[super::RadialState<T>], first: usize) -> Result<T> {
    let sharp = T::one() - T::epsilon() * T::lit(4.0);
    let loose = T::one() - T::lit(S3_BAND);
    let (threshold, hit) = match states[first..].iter().position(|s| s.xi >= sharp) {
        Some(k) => (sharp, first + k),
        None => (loose, first),
    };
    if hit == 0 {
        return Ok(T::zero());
    }
    let (mut lo, mut hi) = (states[hit - 1].r, states[hit].r);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if xi_of(m.profile(), mid)?.0 >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub(crate) fn complete<T: Real>(c: &ClassificationResult<T>) -> bool {
    c.xi_infinity <= T::one() + T::lit(S3_BAND)
}

/// Whether `∫ √(h/r) dr` diverges, decided from the tail exponent: the
/// integrand decays like `r^{-(1+ξ∞)/2}`, so completeness is `ξ∞ ≤ 1`.
pub fn completeness_check<T: Real>(m: &MetricModel<T>) -> bool {
    complete(m.classification())
}
