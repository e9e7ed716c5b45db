//! Integrals of radial curvature densities over geodesic balls.
//!
//! By U(n)-invariance, `∫_{B(s)} P ωⁿ = c_n ∫_0^{v(s)} P d(vⁿ)`, a one
//! dimensional integral that is evaluated cell by cell in the metric's own
//! integration variable.

mod growth;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{abc_r_form, chern_density_k, ricci_eigenvalues, scalar_curvature, sigma_k, Abc};
use crate::error::{Error, Result};
use crate::metric::{MetricClass, MetricModel, RadialState};
use crate::numerics::fit::geometric_limit;
use crate::numerics::log_spaced;
use crate::numerics::quadrature::{integrate, QuadratureOptions};
use crate::scalar::{unit_ball_volume, Real};

pub use growth::{
    coordinate_growth, growth_fit, growth_fit_window, growth_fit_with, CoordinateGrowth, GrowthFit,
    GrowthThresholds, Verdict,
};

type DensityFn<T> = dyn Fn(&RadialState<T>, &Abc<T>) -> T + Send + Sync;

/// A radial function to integrate against `ωⁿ`.
#[derive(Clone)]
pub enum Density<T> {
    One,
    /// Scalar curvature `R`.
    Scalar,
    /// `σ_k` of the real Ricci eigenvalues.
    Sigma(usize),
    /// `Ric^k ∧ ω^{n-k} / ωⁿ` with `Ric` normalised as the first Chern form,
    /// i.e. eigenvalues divided by π.
    Chern(usize),
    /// `|A|^p`.
    APower(T),
    /// `A · v^{1-k}`.
    AWeighted(usize),
    Custom(String, Arc<DensityFn<T>>),
}

impl<T: Real> std::fmt::Debug for Density<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl<T: Real> Density<T> {
    pub fn custom(name: &str, f: impl Fn(&RadialState<T>, &Abc<T>) -> T + Send + Sync + 'static) -> Self {
        Density::Custom(name.to_string(), Arc::new(f))
    }

    pub fn name(&self) -> String {
        match self {
            Density::One => "one".into(),
            Density::Scalar => "scalar".into(),
            Density::Sigma(k) => format!("sigma_{k}"),
            Density::Chern(k) => format!("chern_{k}"),
            Density::APower(p) => format!("A^{p}"),
            Density::AWeighted(k) => format!("A*v^(1-{k})"),
            Density::Custom(name, _) => name.clone(),
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Density::Sigma(k) | Density::Chern(k) | Density::AWeighted(k) => Some(*k),
            _ => None,
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            Density::Sigma(k) if *k < 1 || *k > 2 * n => {
                Err(Error::out_of_range("k", *k as f64, 1.0, (2 * n) as f64))
            }
            Density::Chern(k) | Density::AWeighted(k) if *k < 1 || *k > n => {
                Err(Error::out_of_range("k", *k as f64, 1.0, n as f64))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, st: &RadialState<T>, abc: &Abc<T>, n: usize) -> T {
        let ricci = || ricci_eigenvalues(abc.a, abc.b, abc.c, n);
        match self {
            Density::One => T::one(),
            Density::Scalar => scalar_curvature(abc.a, abc.b, abc.c, n),
            Density::Sigma(k) => {
                let (l, m) = ricci();
                sigma_k(l, m, n, *k).unwrap_or(T::nan())
            }
            Density::Chern(k) => {
                let (l, m) = ricci();
                let pi = T::PI();
                chern_density_k(l / pi, m / pi, n, *k).unwrap_or(T::nan())
            }
            Density::APower(p) => abc.a.abs().powf(*p),
            Density::AWeighted(k) => abc.a * st.v.powi(1 - *k as i32),
            Density::Custom(_, f) => f(st, abc),
        }
    }
}

fn quad<T: Real>(m: &MetricModel<T>) -> QuadratureOptions<T> {
    QuadratureOptions::default().with_rel_tol(m.options().rel_tol)
}

/// `P · n v^{n-1} dv/dw` at `w` in cell `i` (without the `c_n` factor).
fn integrand<T: Real>(m: &MetricModel<T>, d: &Density<T>, i: usize, w: T) -> T {
    let Ok(st) = m.state_in_cell(i, w) else {
        return T::nan();
    };
    let n = m.n();
    let abc = abc_r_form(&st);
    let p = d.eval(&st, &abc, n);
    if p == T::zero() {
        return T::zero();
    }
    p * T::from_usize_lossy(n) * st.v.powi(n as i32 - 1) * m.dv_dw(i, &st)
}

fn cell_integral<T: Real>(m: &MetricModel<T>, d: &Density<T>, i: usize, a: T, b: T) -> Result<T> {
    Ok(integrate(|w| integrand(m, d, i, w), a, b, &quad(m))?.value)
}

/// Running integral of one density, reusable across many radii.
pub struct BallIntegrator<'a, T: Real> {
    model: &'a MetricModel<T>,
    density: Density<T>,
    /// `prefix[i]` = integral over cells `0..i` (without `c_n`).
    prefix: Vec<T>,
}

impl<'a, T: Real> BallIntegrator<'a, T> {
    /// Prepare integrals over all cells that end at or before `s_max`.
    pub fn new(model: &'a MetricModel<T>, density: Density<T>, s_max: T) -> Result<Self> {
        density.check(model.n())?;
        let knots = model.knots();
        let cells = model.cells();
        let full = knots.partition_point(|k| k.s <= s_max).saturating_sub(1).min(cells.len());
        let parts: Vec<T> = (0..full)
            .into_par_iter()
            .map(|i| cell_integral(model, &density, i, cells[i].a, cells[i].b))
            .collect::<Result<_>>()?;
        let mut prefix = Vec::with_capacity(full + 1);
        let mut acc = T::zero();
        prefix.push(acc);
        for p in parts {
            acc = acc + p;
            prefix.push(acc);
        }
        Ok(Self { model, density, prefix })
    }

    /// `∫_{B(s)} P ωⁿ`.
    pub fn at(&self, s: T) -> Result<T> {
        let m = self.model;
        if s > m.s_end() {
            return Err(Error::Extrapolation { t: s.as_f64(), end: m.s_end().as_f64() });
        }
        let (i, w) = m.locate_s(s)?;
        if i >= self.prefix.len() {
            return Err(Error::InvalidArgument(format!("s = {s} beyond the prepared range")));
        }
        let a = m.cells()[i].a;
        let partial = cell_integral(m, &self.density, i, a, w)?;
        Ok(unit_ball_volume::<T>(m.n()) * (self.prefix[i] + partial))
    }

    /// Integral over the whole table (requires `s_max ≥ s_end` at construction).
    pub fn total(&self) -> Result<T> {
        if self.prefix.len() != self.model.cells().len() + 1 {
            return Err(Error::InvalidArgument("integrator does not cover the table".into()));
        }
        Ok(unit_ball_volume::<T>(self.model.n()) * *self.prefix.last().expect("prefix"))
    }
}

/// Geodesic distance from the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coord<T> {
    R(T),
    X(T),
}

pub fn distance_s<T: Real>(m: &MetricModel<T>, upto: Coord<T>) -> Result<T> {
    Ok(match upto {
        Coord::R(r) => m.state_at_r(r)?.s,
        Coord::X(x) => m.state_at_x(x)?.s,
    })
}

/// `∫_0^r √h/(2√t) dt` by adaptive quadrature in `u = √t`, reading `h`
/// pointwise from the model.
pub fn distance_by_quadrature<T: Real>(m: &MetricModel<T>, r: T) -> Result<T> {
    let f = |u: T| m.state_at_r(u * u).map(|st| st.h.sqrt()).unwrap_or(T::nan());
    let rt = r.sqrt();
    let mut breaks = vec![T::zero()];
    breaks.extend(m.grid_r().into_iter().map(T::sqrt).filter(|u| *u > T::zero() && *u < rt).step_by(64));
    breaks.push(rt);
    let mut acc = T::zero();
    for w in breaks.windows(2) {
        acc = acc + integrate(f, w[0], w[1], &quad(m))?.value;
    }
    Ok(acc)
}

/// `Vol(B(s)) = c_n v(s)ⁿ`.
pub fn volume_ball<T: Real>(m: &MetricModel<T>, s: T) -> Result<T> {
    Ok(unit_ball_volume::<T>(m.n()) * m.v_at_s(s)?.powi(m.n() as i32))
}

pub fn ball_integral<T: Real>(m: &MetricModel<T>, density: &Density<T>, s: T) -> Result<T> {
    BallIntegrator::new(m, density.clone(), s)?.at(s)
}

/// `∫_{B(s)} R ωⁿ / Vol(B(s))`.
pub fn average_scalar_curvature<T: Real>(m: &MetricModel<T>, s: T) -> Result<T> {
    let vol = volume_ball(m, s)?;
    if vol == T::zero() {
        return Ok(T::zero());
    }
    Ok(ball_integral(m, &Density::Scalar, s)? / vol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Normalization<T> {
    /// Divide by `s^e`.
    Power(T),
    /// Multiply by `s² / Vol(B(s))`.
    ByVolume,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesRow<T> {
    pub s: T,
    pub vol: T,
    pub integral: T,
    pub normalized: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallIntegralSeries<T> {
    pub density_name: String,
    pub k: Option<usize>,
    pub normalization: Normalization<T>,
    pub rows: Vec<SeriesRow<T>>,
}

/// `count` log-spaced radii on `[s(r = 1), s_end]`.
pub fn default_s_grid<T: Real>(m: &MetricModel<T>, count: usize) -> Result<Vec<T>> {
    let end = m.s_end();
    let lo = if m.r_end() > T::one() {
        m.s_at_r(T::one())?
    } else {
        end * T::lit(1e-4)
    };
    if !(lo > T::zero() && lo < end) || count < 2 {
        return Err(Error::InvalidArgument("cannot span an s-grid on this model".into()));
    }
    Ok(log_spaced(lo, end, count))
}

/// Integral of `density` over balls of every radius in `s_grid`.
pub fn series<T: Real>(
    m: &MetricModel<T>,
    density: Density<T>,
    s_grid: &[T],
    normalization: Normalization<T>,
) -> Result<BallIntegralSeries<T>> {
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || s_grid.first().is_some_and(|s| !(*s > T::zero())) {
        return Err(Error::InvalidArgument("s-grid must be positive and strictly increasing".into()));
    }
    let s_max = s_grid.last().copied().unwrap_or(T::zero());
    let name = density.name();
    let k = density.k();
    let integrator = BallIntegrator::new(m, density, s_max)?;
    let rows = s_grid
        .par_iter()
        .map(|&s| {
            let integral = integrator.at(s)?;
            let vol = volume_ball(m, s)?;
            let normalized = match normalization {
                Normalization::Power(e) => integral / s.powf(e),
                Normalization::ByVolume => integral * s * s / vol,
            };
            Ok(SeriesRow { s, vol, integral, normalized })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BallIntegralSeries { density_name: name, k, normalization, rows })
}

/// `s^{-(2n-2k)} ∫_{B(s)} σ_k ωⁿ`.
pub fn normalized_sigma_series<T: Real>(m: &MetricModel<T>, k: usize, s_grid: &[T]) -> Result<BallIntegralSeries<T>> {
    if k < 1 || k > m.n() {
        return Err(Error::out_of_range("k", k as f64, 1.0, m.n() as f64));
    }
    let e = T::from_usize_lossy(2 * (m.n() - k));
    series(m, Density::Sigma(k), s_grid, Normalization::Power(e))
}

/// `s^{-(2n-2k)} ∫_{B(s)} Ric^k ∧ ω^{n-k}`.
pub fn normalized_chern_series<T: Real>(m: &MetricModel<T>, k: usize, s_grid: &[T]) -> Result<BallIntegralSeries<T>> {
    if k < 1 || k > m.n() {
        return Err(Error::out_of_range("k", k as f64, 1.0, m.n() as f64));
    }
    let e = T::from_usize_lossy(2 * (m.n() - k));
    series(m, Density::Chern(k), s_grid, Normalization::Power(e))
}

/// `s^{-(2n-2)} ∫_{B(s)} R ωⁿ`.
pub fn normalized_scalar_series<T: Real>(m: &MetricModel<T>, s_grid: &[T]) -> Result<BallIntegralSeries<T>> {
    let e = T::from_usize_lossy(2 * (m.n() - 1));
    series(m, Density::Scalar, s_grid, Normalization::Power(e))
}

/// `(s² / Vol(B(s))) ∫_{B(s)} |A|^p ωⁿ`.
pub fn lp_series<T: Real>(m: &MetricModel<T>, p: T, s_grid: &[T]) -> Result<BallIntegralSeries<T>> {
    series(m, Density::APower(p), s_grid, Normalization::ByVolume)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernNumber<T> {
    /// `∫_{ℂⁿ} Ricⁿ` including the tail beyond the table.
    pub value: T,
    /// `c_n (n ξ∞ / π)ⁿ`.
    pub expected: T,
    /// `c_n (n / π)ⁿ`.
    pub bound: T,
    /// Contribution from beyond the table.
    pub tail: T,
    pub tail_share: T,
}

/// Tail beyond the table with ξ frozen at its last value `a`: there `A = 0`,
/// `D = D_m + a(v - v_m)`, hence `B = (a v_m - D_m)/v²` and `C = 2D/v²`.
/// Integrated in `y = 1/v` on `(0, 1/v_m]`.
fn frozen_tail<T: Real>(m: &MetricModel<T>, d: &Density<T>, last: &RadialState<T>) -> Result<T> {
    let n = m.n();
    let a = last.xi;
    let k = a * last.v - last.d;
    let y_m = T::one() / last.v;
    let f = |y: T| {
        let v = T::one() / y;
        let dd = a * v - k;
        let abc = Abc {
            a: T::zero(),
            b: k * y * y,
            c: T::lit(2.0) * dd * y * y,
        };
        let st = RadialState { v, d: dd, xi: a, dxi: T::zero(), ..*last };
        d.eval(&st, &abc, n) * T::from_usize_lossy(n) * v.powi(n as i32 + 1)
    };
    Ok(unit_ball_volume::<T>(n) * integrate(f, T::zero(), y_m, &quad(m))?.value)
}

pub fn chern_number<T: Real>(m: &MetricModel<T>) -> Result<ChernNumber<T>> {
    let n = m.n();
    let cn = unit_ball_volume::<T>(n);
    let nn = T::from_usize_lossy(n);
    let pi = T::PI();
    let class = m.classification();
    let bound = cn * (nn / pi).powi(n as i32);
    if class.class == MetricClass::Flat {
        return Ok(ChernNumber {
            value: T::zero(),
            expected: T::zero(),
            bound,
            tail: T::zero(),
            tail_share: T::zero(),
        });
    }
    if class.ambiguous {
        return Err(Error::InvalidArgument(
            "tail of ξ is undecided; cannot complete the integral".into(),
        ));
    }
    let density = Density::Chern(n);
    let bulk = BallIntegrator::new(m, density.clone(), m.s_end())?.total()?;
    let last = m.state_at_s(m.s_end())?;
    let tail = frozen_tail(m, &density, &last)?;
    let value = bulk + tail;
    Ok(ChernNumber {
        value,
        expected: cn * (nn * class.xi_infinity / pi).powi(n as i32),
        bound,
        tail,
        tail_share: if value == T::zero() { T::zero() } else { tail / value },
    })
}

/// Both sides of the integration by parts
/// `∫_{B(s)} A v^{1-k} ωⁿ = -c_n n v^{n-k}/√(1+F'²) + c_n n(n-k) ∫_0^v v^{n-k-1}/√(1+F'²) dv`.
pub fn integration_by_parts<T: Real>(m: &MetricModel<T>, k: usize, s: T) -> Result<(T, T)> {
    let n = m.n();
    if k < 1 || k >= n {
        return Err(Error::out_of_range("k", k as f64, 1.0, (n - 1) as f64));
    }
    let direct = ball_integral(m, &Density::AWeighted(k), s)?;
    let nk = T::from_usize_lossy(n - k);
    let inner = Density::custom("by_parts", move |st: &RadialState<T>, _: &Abc<T>| {
        nk * st.v.powi(-(k as i32)) * (T::one() - st.xi)
    });
    let volume_part = ball_integral(m, &inner, s)?;
    let st = m.state_at_s(s)?;
    let boundary = unit_ball_volume::<T>(n) * T::from_usize_lossy(n) * st.v.powi((n - k) as i32) * (T::one() - st.xi);
    Ok((direct, volume_part - boundary))
}

/// `lim Vol(B(s)) / s^e`, extrapolated from the last three decades in r.
pub fn volume_ratio_limit<T: Real>(m: &MetricModel<T>, exponent: T) -> Result<T> {
    let r_end = m.r_end();
    let cn = unit_ball_volume::<T>(m.n());
    let vals: Vec<T> = [T::lit(0.01), T::lit(0.1), T::one()]
        .iter()
        .map(|f| {
            let st = m.state_at_r(r_end * *f)?;
            Ok(cn * st.v.powi(m.n() as i32) / st.s.powf(exponent))
        })
        .collect::<Result<_>>()?;
    Ok(geometric_limit(vals[0], vals[1], vals[2]))
}

/// Write `s,vol,integral,normalized` rows.
pub fn write_series_csv<T: Real, W: std::io::Write>(series: &BallIntegralSeries<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "vol", "integral", "normalized"])?;
    for r in &series.rows {
        w.write_record([r.s, r.vol, r.integral, r.normalized].map(|v| format!("{:?}", v.as_f64())))?;
    }
    w.flush()?;
    Ok(())
}
