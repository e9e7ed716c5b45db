//! U(n)-invariant Kähler metrics built from a generator profile.
//!
//! The radial line is cut into cells. On each cell the integrands for the
//! tracked quantities (log h, v = rf, geodesic distance s, and the deficit
//! D = v - x²) are sampled at Chebyshev points and integrated spectrally,
//! which gives dense output everywhere. ξ-profiles are integrated in
//! `σ = √r` near the origin and in `u = ln r` beyond; F''-profiles in `x`.

mod classify;
mod convert;
mod snapshot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::chebyshev::{self, Antiderivative, POINTS};
use crate::numerics::log_spaced;
use crate::profile::{self, GeneratorProfile, ProfileKind};
use crate::scalar::Real;

pub use classify::{classify, completeness_check, ClassificationResult, MetricClass, VolumeGrowth};
pub use convert::{fprime_from_xi, h_to_f, xi_from_fprime, xi_to_h};
pub use snapshot::{ClassificationSnapshot, JsonReal, MetricSnapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repr {
    FromXi,
    FromF,
    FromH,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions<T> {
    /// Log-spaced grid points (cell boundaries before refinement).
    pub grid_size: usize,
    pub r_min: T,
    pub r_max: T,
    /// Outer end of the x-domain for F''-profiles; defaults to `√r_max`.
    pub x_max: Option<T>,
    /// `h(0)` for ξ- and F''-profiles.
    pub h0: T,
    /// Run profile validation and the completeness check.
    pub validate: bool,
    /// Relative tolerance of the ball-integral quadrature.
    pub rel_tol: T,
}

impl<T: Real> Default for BuildOptions<T> {
    fn default() -> Self {
        Self {
            grid_size: 4096,
            r_min: T::lit(1e-8),
            r_max: T::lit(1e8),
            x_max: None,
            h0: T::one(),
            validate: true,
            rel_tol: T::lit(1e-8),
        }
    }
}

impl<T: Real> BuildOptions<T> {
    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid_size = n;
        self
    }

    pub fn with_r_max(mut self, r: T) -> Self {
        self.r_max = r;
        self
    }

    pub fn with_x_max(mut self, x: T) -> Self {
        self.x_max = Some(x);
        self
    }

    pub fn with_rel_tol(mut self, tol: T) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn unvalidated(mut self) -> Self {
        self.validate = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CellVar {
    Sqrt,
    LogR,
    X,
}

// tracked quantities, r-domain
const L: usize = 0;
const RV: usize = 1;
const RS: usize = 2;
const RD: usize = 3;
// tracked quantities, x-domain
const FP: usize = 0;
const XS: usize = 1;
const XV: usize = 2;
const XD: usize = 3;
const LAMBDA: usize = 4;

#[derive(Clone, Debug)]
pub(crate) struct Cell<T> {
    pub var: CellVar,
    pub a: T,
    pub b: T,
    start: Vec<T>,
    series: Vec<Antiderivative<T>>,
}

impl<T: Real> Cell<T> {
    fn value(&self, k: usize, w: T) -> T {
        self.start[k] + self.series[k].eval(w)
    }

    fn end_values(&self) -> Vec<T> {
        self.start
            .iter()
            .zip(&self.series)
            .map(|(s, a)| *s + a.total())
            .collect()
    }
}

/// Every radial quantity at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialState<T> {
    pub r: T,
    pub x: T,
    pub s: T,
    /// `v = r f`, so that `Vol(B) = c_n vⁿ`.
    pub v: T,
    pub h: T,
    pub f: T,
    pub xi: T,
    /// `dξ/dr`.
    pub dxi: T,
    /// `F'(x)`; infinite once ξ reaches 1.
    pub fprime: T,
    pub fpp: T,
    /// `v - x²`.
    pub d: T,
}

/// Boundary values of the cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Knot<T> {
    pub r: T,
    pub x: T,
    pub s: T,
    pub v: T,
}

#[derive(Clone, Debug)]
pub struct MetricModel<T> {
    n: usize,
    repr: Repr,
    profile: GeneratorProfile<T>,
    h0: T,
    options: BuildOptions<T>,
    analytic_fprime: bool,
    cells: Vec<Cell<T>>,
    knots: Vec<Knot<T>>,
    class: Option<ClassificationResult<T>>,
}

/// Build the metric generated by `profile` on ℂⁿ.
pub fn build_metric<T: Real>(
    profile: &GeneratorProfile<T>,
    n: usize,
    opts: &BuildOptions<T>,
) -> Result<MetricModel<T>> {
    if n < 2 {
        return Err(Error::out_of_range("n", n as f64, 2.0, f64::INFINITY));
    }
    if opts.grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be at least 2".into()));
    }
    if !(opts.r_min > T::zero() && opts.r_max > opts.r_min && opts.r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < r_min < r_max < inf, got [{}, {}]",
            opts.r_min, opts.r_max
        )));
    }
    if !(opts.rel_tol > T::zero() && opts.rel_tol < T::one()) {
        return Err(Error::out_of_range("rel_tol", opts.rel_tol.as_f64(), 0.0, 1.0));
    }
    if !(opts.h0 > T::zero()) {
        return Err(Error::InvalidArgument("h0 must be positive".into()));
    }
    if opts.validate {
        let report = profile::validate(profile);
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidProfile(format!(
                "{} violated at t = {} (observed {})",
                v.condition, v.t, v.observed
            )));
        }
    }
    let mut model = match profile.kind {
        ProfileKind::Xi | ProfileKind::H => build_r_domain(profile, n, opts)?,
        ProfileKind::Fpp => build_x_domain(profile, n, opts)?,
    };
    let class = classify(&model)?;
    if opts.validate && !classify::complete(&class) {
        return Err(Error::NotComplete {
            xi_infinity: class.xi_infinity.as_f64(),
        });
    }
    model.class = Some(class);
    Ok(model)
}

fn cell_tolerance<T: Real>() -> T {
    T::lit(1e-11).max(T::epsilon() * T::lit(1e4))
}

fn sorted_unique<T: Real>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite boundary"));
    v.dedup();
    v
}

/// `ξ(r)` for ξ- and h-profiles.
fn xi_of<T: Real>(p: &GeneratorProfile<T>, r: T) -> Result<(T, T)> {
    let j = p.eval_jet(r)?;
    match p.kind {
        ProfileKind::Xi => Ok((j.value, j.d1)),
        ProfileKind::H => {
            if !(j.value > T::zero()) {
                return Err(Error::Domain {
                    what: "nonpositive h",
                    at: r.as_f64(),
                });
            }
            let lg = j.d1 / j.value;
            let xi = -r * lg;
            let dxi = -lg - r * (j.d2 / j.value - lg * lg);
            Ok((xi, dxi))
        }
        ProfileKind::Fpp => unreachable!("x-domain profile"),
    }
}

fn r_of<T: Real>(var: CellVar, w: T) -> T {
    match var {
        CellVar::Sqrt => w * w,
        CellVar::LogR => w.exp(),
        CellVar::X => unreachable!(),
    }
}

fn check_finite<T: Real>(values: &[T; POINTS], what: &'static str, at: T) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain { what, at: at.as_f64() })
    }
}

type CellResult<T> = Result<(Cell<T>, T, bool)>;

/// Error of the cell's running integrals relative to what they accumulate,
/// `|tail| (b - a)` against `max(|end value|, local size, floor)`; log
/// quantities get an absolute floor of one.
///
/// Also reports whether every series that misses `tol` has a flat upper
/// spectrum, the signature of sampling noise rather than unresolved shape.
fn cell_error<T: Real>(coeffs: &[[T; POINTS]], start: &[T], floors: &[T], a: T, b: T) -> (T, bool) {
    let tol = cell_tolerance::<T>();
    let width = b - a;
    let mut worst = T::zero();
    let mut flat = true;
    for ((c, s0), floor) in coeffs.iter().zip(start).zip(floors) {
        let scale = c.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tail = c[POINTS - 1].abs() + c[POINTS - 2].abs();
        let err = tail * width;
        if err == T::zero() {
            continue;
        }
        let total = Antiderivative::from_coefficients(a, b, c).total();
        let ratio = err / (*s0 + total).abs().max(scale * width).max(*floor);
        if ratio > tol {
            let mid = c[POINTS / 2].abs() + c[POINTS / 2 - 1].abs();
            flat &= tail >= T::lit(0.5) * mid;
        }
        worst = worst.max(ratio);
    }
    (worst, flat)
}

fn r_cell<T: Real>(p: &GeneratorProfile<T>, var: CellVar, a: T, b: T, start: &[T]) -> CellResult<T> {
    let w = chebyshev::nodes(a, b);
    let mut xi = [T::zero(); POINTS];
    let mut r = [T::zero(); POINTS];
    for j in 0..POINTS {
        r[j] = r_of(var, w[j]);
        xi[j] = xi_of(p, r[j])?.0;
    }
    let two = T::lit(2.0);
    let mut il = [T::zero(); POINTS];
    for j in 0..POINTS {
        il[j] = match var {
            CellVar::LogR => -xi[j],
            _ if w[j] == T::zero() => T::zero(),
            _ => -two * xi[j] / w[j],
        };
    }
    check_finite(&il, "non-finite xi", r[0])?;
    let cl = chebyshev::coefficients(&il);
    let anti_l = Antiderivative::from_coefficients(a, b, &cl);
    let (mut iv, mut is, mut id) = ([T::zero(); POINTS], [T::zero(); POINTS], [T::zero(); POINTS]);
    for j in 0..POINTS {
        let h = (start[L] + anti_l.eval(w[j])).exp();
        match var {
            CellVar::LogR => {
                iv[j] = r[j] * h;
                is[j] = (r[j] * h).sqrt() * T::lit(0.5);
                id[j] = xi[j] * r[j] * h;
            }
            _ => {
                iv[j] = two * w[j] * h;
                is[j] = h.sqrt();
                id[j] = two * w[j] * xi[j] * h;
            }
        }
    }
    check_finite(&iv, "non-finite h", r[0])?;
    let coeffs = [cl, chebyshev::coefficients(&iv), chebyshev::coefficients(&is), chebyshev::coefficients(&id)];
    let (err, flat) = cell_error(&coeffs, start, &[T::one(), T::zero(), T::zero(), T::zero()], a, b);
    let mut series = vec![anti_l];
    series.extend(coeffs[1..].iter().map(|c| Antiderivative::from_coefficients(a, b, c)));
    Ok((
        Cell { var, a, b, start: start.to_vec(), series },
        err,
        flat,
    ))
}

fn x_cell<T: Real>(p: &GeneratorProfile<T>, analytic: bool, a: T, b: T, start: &[T]) -> CellResult<T> {
    let x = chebyshev::nodes(a, b);
    let mut fpp = [T::zero(); POINTS];
    for j in 0..POINTS {
        fpp[j] = p.eval(x[j])?;
    }
    check_finite(&fpp, "non-finite F''", x[0])?;
    let cf = chebyshev::coefficients(&fpp);
    let anti_f = Antiderivative::from_coefficients(a, b, &cf);
    let two = T::lit(2.0);
    let (mut is, mut iv, mut id, mut il) = (
        [T::zero(); POINTS],
        [T::zero(); POINTS],
        [T::zero(); POINTS],
        [T::zero(); POINTS],
    );
    for j in 0..POINTS {
        let fp = if analytic {
            p.antiderivative(x[j]).expect("analytic F'")
        } else {
            start[FP] + anti_f.eval(x[j])
        };
        let g = (T::one() + fp * fp).sqrt();
        let q = fp * fp / (g + T::one());
        is[j] = g;
        iv[j] = two * x[j] * g;
        id[j] = two * x[j] * q;
        il[j] = if x[j] == T::zero() { T::zero() } else { q / x[j] };
    }
    check_finite(&iv, "non-finite F'", x[0])?;
    let coeffs = [
        cf,
        chebyshev::coefficients(&is),
        chebyshev::coefficients(&iv),
        chebyshev::coefficients(&id),
        chebyshev::coefficients(&il),
    ];
    let floors = [T::zero(), T::zero(), T::zero(), T::zero(), T::one()];
    let (err, flat) = cell_error(&coeffs, start, &floors, a, b);
    let series = coeffs
        .iter()
        .map(|c| Antiderivative::from_coefficients(a, b, c))
        .collect();
    Ok((
        Cell { var: CellVar::X, a, b, start: start.to_vec(), series },
        err,
        flat,
    ))
}

/// March across `bounds`, splitting any cell whose running integrals miss the
/// tolerance.
fn march<T: Real, F>(bounds: &[(CellVar, T, T)], start: Vec<T>, make: F) -> Result<Vec<Cell<T>>>
where
    F: Fn(CellVar, T, T, &[T]) -> CellResult<T>,
{
    let tol = cell_tolerance::<T>();
    let mut cells = Vec::with_capacity(bounds.len());
    let mut state = start;
    for &(var, a, b) in bounds {
        // (lo, hi, depth, parent spectrum flat), leftmost on top
        let mut pending = vec![(a, b, 0u32, false)];
        while let Some((lo, hi, depth, parent_flat)) = pending.pop() {
            let (cell, err, flat) = make(var, lo, hi, &state)?;
            let tiny = (hi - lo) <= T::lit(1e-13) * (T::one() + hi.abs());
            // a flat spectrum that survives halving is noise; refining further
            // only multiplies cells
            let noise = flat && parent_flat;
            if err > tol && depth < 48 && !tiny && !noise {
                let mid = T::lit(0.5) * (lo + hi);
                pending.push((mid, hi, depth + 1, flat));
                pending.push((lo, mid, depth + 1, flat));
                continue;
            }
            state = cell.end_values();
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn build_r_domain<T: Real>(p: &GeneratorProfile<T>, n: usize, opts: &BuildOptions<T>) -> Result<MetricModel<T>> {
    let r_max = opts.r_max.min(p.domain_end);
    if !(r_max > opts.r_min) {
        return Err(Error::InvalidArgument(format!(
            "profile domain ends at {} before r_min = {}",
            p.domain_end, opts.r_min
        )));
    }
    let h_origin = match p.kind {
        ProfileKind::H => p.eval(T::zero())?,
        _ => opts.h0,
    };
    if !(h_origin > T::zero()) {
        return Err(Error::InvalidProfile("h(0) must be positive".into()));
    }
    let breaks = p.breakpoints(T::zero(), r_max);
    let mut inner = vec![T::zero(), opts.r_min.sqrt()];
    inner.extend(breaks.iter().filter(|b| **b > T::zero() && **b < opts.r_min).map(|b| b.sqrt()));
    let inner = sorted_unique(inner);
    let mut outer: Vec<T> = log_spaced(opts.r_min, r_max, opts.grid_size)
        .into_iter()
        .map(T::ln)
        .collect();
    outer.extend(breaks.iter().filter(|b| **b > opts.r_min && **b < r_max).map(|b| b.ln()));
    let outer = sorted_unique(outer);
    let mut bounds: Vec<(CellVar, T, T)> = inner.windows(2).map(|w| (CellVar::Sqrt, w[0], w[1])).collect();
    bounds.extend(outer.windows(2).map(|w| (CellVar::LogR, w[0], w[1])));
    let start = vec![h_origin.ln(), T::zero(), T::zero(), T::zero()];
    let cells = march(&bounds, start, |var, a, b, s| r_cell(p, var, a, b, s))?;
    let repr = if p.kind == ProfileKind::H { Repr::FromH } else { Repr::FromXi };
    MetricModel::assemble(n, repr, p.clone(), h_origin, *opts, false, cells)
}

fn build_x_domain<T: Real>(p: &GeneratorProfile<T>, n: usize, opts: &BuildOptions<T>) -> Result<MetricModel<T>> {
    let x_max = opts.x_max.unwrap_or(opts.r_max.sqrt()).min(p.domain_end);
    let x_min = opts.r_min.sqrt();
    if !(x_max > x_min) {
        return Err(Error::InvalidArgument(format!(
            "x-domain [{x_min}, {x_max}] is empty"
        )));
    }
    let analytic = p.antiderivative(T::zero()).is_some();
    let breaks = p.breakpoints(T::zero(), x_max);
    let mut pts = vec![T::zero()];
    pts.extend(log_spaced(x_min, x_max, opts.grid_size));
    pts.extend(breaks.into_iter().filter(|b| *b > T::zero() && *b < x_max));
    let pts = sorted_unique(pts);
    let bounds: Vec<(CellVar, T, T)> = pts.windows(2).map(|w| (CellVar::X, w[0], w[1])).collect();
    let cells = march(&bounds, vec![T::zero(); 5], |_, a, b, s| x_cell(p, analytic, a, b, s))?;
    MetricModel::assemble(n, Repr::FromF, p.clone(), opts.h0, *opts, analytic, cells)
}

impl<T: Real> MetricModel<T> {
    fn assemble(
        n: usize,
        repr: Repr,
        profile: GeneratorProfile<T>,
        h0: T,
        options: BuildOptions<T>,
        analytic_fprime: bool,
        cells: Vec<Cell<T>>,
    ) -> Result<Self> {
        let mut m = Self {
            n,
            repr,
            profile,
            h0,
            options,
            analytic_fprime,
            cells,
            knots: Vec::new(),
            class: None,
        };
        let mut knots = Vec::with_capacity(m.cells.len() + 1);
        for i in 0..m.cells.len() {
            let st = m.state_in_cell(i, m.cells[i].a)?;
            knots.push(Knot { r: st.r, x: st.x, s: st.s, v: st.v });
        }
        let last = m.cells.len() - 1;
        let st = m.state_in_cell(last, m.cells[last].b)?;
        knots.push(Knot { r: st.r, x: st.x, s: st.s, v: st.v });
        m.knots = knots;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn profile(&self) -> &GeneratorProfile<T> {
        &self.profile
    }

    pub fn h0(&self) -> T {
        self.h0
    }

    pub fn options(&self) -> &BuildOptions<T> {
        &self.options
    }

    pub fn classification(&self) -> &ClassificationResult<T> {
        self.class.as_ref().expect("classified during build")
    }

    pub(crate) fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub(crate) fn knots(&self) -> &[Knot<T>] {
        &self.knots
    }

    /// `r` at every cell boundary, starting at 0.
    pub fn grid_r(&self) -> Vec<T> {
        self.knots.iter().map(|k| k.r).collect()
    }

    /// `x` at every cell boundary, starting at 0.
    pub fn grid_x(&self) -> Vec<T> {
        self.knots.iter().map(|k| k.x).collect()
    }

    /// Full states at every cell boundary.
    pub fn grid_states(&self) -> Vec<RadialState<T>> {
        let mut out: Vec<RadialState<T>> = (0..self.cells.len())
            .map(|i| self.state_in_cell(i, self.cells[i].a).expect("grid state"))
            .collect();
        let last = self.cells.len() - 1;
        out.push(self.state_in_cell(last, self.cells[last].b).expect("grid state"));
        out
    }

    pub fn r_end(&self) -> T {
        self.knots.last().expect("knots").r
    }

    pub fn x_end(&self) -> T {
        self.knots.last().expect("knots").x
    }

    pub fn s_end(&self) -> T {
        self.knots.last().expect("knots").s
    }

    /// `F'(∞)` for F''-profiles with an analytic antiderivative.
    pub fn fprime_analytic_limit(&self) -> Option<T> {
        if self.analytic_fprime {
            self.profile.antiderivative(T::infinity())
        } else {
            None
        }
    }

    pub(crate) fn state_in_cell(&self, i: usize, w: T) -> Result<RadialState<T>> {
        let c = &self.cells[i];
        match c.var {
            CellVar::X => self.x_state(c, w),
            var => self.r_state(c, var, w),
        }
    }

    /// `dv/dw` for the cell's integration variable.
    pub(crate) fn dv_dw(&self, i: usize, st: &RadialState<T>) -> T {
        let two = T::lit(2.0);
        match self.cells[i].var {
            CellVar::LogR => st.r * st.h,
            CellVar::Sqrt => two * st.r.sqrt() * st.h,
            CellVar::X => two * st.x * (T::one() + st.fprime * st.fprime).sqrt(),
        }
    }

    fn r_state(&self, c: &Cell<T>, var: CellVar, w: T) -> Result<RadialState<T>> {
        let r = r_of(var, w);
        let h = c.value(L, w).exp();
        let v = c.value(RV, w);
        let s = c.value(RS, w);
        let d = c.value(RD, w);
        let (xi, dxi) = xi_of(&self.profile, r)?;
        let x = (r * h).sqrt();
        let f = if r > T::zero() { v / r } else { h };
        let fprime = if xi >= T::one() { T::infinity() } else { fprime_from_xi(xi.max(T::zero()))? };
        let fpp = if xi >= T::one() {
            T::infinity()
        } else if fprime > T::zero() {
            let one_minus = T::one() - xi;
            let q = one_minus * one_minus;
            dxi / (fprime * q * q * (h / (T::lit(4.0) * r)).sqrt())
        } else if r == T::zero() {
            (T::lit(2.0) * dxi / h).sqrt()
        } else if dxi > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        Ok(RadialState { r, x, s, v, h, f, xi, dxi, fprime, fpp, d })
    }

    fn x_state(&self, c: &Cell<T>, x: T) -> Result<RadialState<T>> {
        let fp = if self.analytic_fprime {
            self.profile.antiderivative(x).expect("analytic F'")
        } else {
            c.value(FP, x)
        };
        let fpp = self.profile.eval(x)?;
        let g = (T::one() + fp * fp).sqrt();
        let lam = c.value(LAMBDA, x);
        let two = T::lit(2.0);
        let r = x * x * (two * lam).exp() / self.h0;
        let h = self.h0 * (-two * lam).exp();
        let v = c.value(XV, x);
        let f = if x > T::zero() { v / r } else { self.h0 };
        let xi = fp * fp / (g * (g + T::one()));
        let dxi = if x > T::zero() {
            fp * fpp * x / (two * r * g * g * g * g)
        } else {
            fpp * fpp * self.h0 / two
        };
        Ok(RadialState {
            r,
            x,
            s: c.value(XS, x),
            v,
            h,
            f,
            xi,
            dxi,
            fprime: fp,
            fpp,
            d: c.value(XD, x),
        })
    }

    /// Cell containing the coordinate `key(knot) = target`.
    fn find_cell(&self, target: T, key: impl Fn(&Knot<T>) -> T, what: &'static str) -> Result<usize> {
        let lo = key(&self.knots[0]);
        let hi = key(self.knots.last().expect("knots"));
        if !(target >= lo && target <= hi) {
            return Err(Error::out_of_range(what, target.as_f64(), lo.as_f64(), hi.as_f64()));
        }
        // first knot with key >= target, then step back to its cell
        let k = self.knots.partition_point(|kn| key(kn) < target);
        Ok(k.saturating_sub(1).min(self.cells.len() - 1))
    }

    /// Smallest `w` in cell `i` with `q(w) >= target`, for nondecreasing `q`.
    fn solve(&self, i: usize, target: T, q: impl Fn(T) -> T) -> T {
        let c = &self.cells[i];
        let (mut lo, mut hi) = (c.a, c.b);
        if q(lo) >= target {
            return lo;
        }
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if q(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    pub fn state_at_r(&self, r: T) -> Result<RadialState<T>> {
        let i = self.find_cell(r, |k| k.r, "r")?;
        let c = &self.cells[i];
        let w = match c.var {
            CellVar::Sqrt => r.sqrt(),
            CellVar::LogR => r.ln(),
            CellVar::X => {
                let two = T::lit(2.0);
                self.solve(i, r, |x| x * x * (two * c.value(LAMBDA, x)).exp() / self.h0)
            }
        };
        self.state_in_cell(i, w.max(c.a).min(c.b))
    }

    pub fn state_at_x(&self, x: T) -> Result<RadialState<T>> {
        let i = self.find_cell(x, |k| k.x, "x")?;
        let c = &self.cells[i];
        let w = match c.var {
            CellVar::X => x,
            var => self.solve(i, x, |w| (r_of(var, w) * c.value(L, w).exp()).sqrt()),
        };
        self.state_in_cell(i, w.max(c.a).min(c.b))
    }

    pub fn state_at_s(&self, s: T) -> Result<RadialState<T>> {
        let (i, w) = self.locate_s(s)?;
        self.state_in_cell(i, w)
    }

    /// Cell index and cell variable where the distance equals `s`.
    pub(crate) fn locate_s(&self, s: T) -> Result<(usize, T)> {
        let i = self.find_cell(s, |k| k.s, "s")?;
        let c = &self.cells[i];
        let k = if c.var == CellVar::X { XS } else { RS };
        Ok((i, self.solve(i, s, |w| c.value(k, w))))
    }

    /// Geodesic distance from the origin to radius `r`.
    pub fn s_at_r(&self, r: T) -> Result<T> {
        Ok(self.state_at_r(r)?.s)
    }

    /// `v = rf` at distance `s`; errors beyond the table.
    pub fn v_at_s(&self, s: T) -> Result<T> {
        let end = self.s_end();
        if s > end {
            return Err(Error::Extrapolation { t: s.as_f64(), end: end.as_f64() });
        }
        Ok(self.state_at_s(s)?.v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi_model(src: &str, n: usize) -> MetricModel<f64> {
        let p = GeneratorProfile::parse(ProfileKind::Xi, src).unwrap();
        build_metric(&p, n, &BuildOptions::default()).unwrap()
    }

    #[test]
    fn flat_model() {
        let m = xi_model("0", 2);
        for st in m.grid_states() {
            assert_eq!(st.h, 1.0);
            assert!((st.f - 1.0).abs() < 1e-13);
            assert!((st.s - st.r.sqrt()).abs() <= 1e-13 * (1.0 + st.s));
            assert!((st.v - st.r).abs() <= 1e-13 * st.r);
            assert_eq!(st.d, 0.0);
        }
        assert_eq!(m.classification().class, MetricClass::Flat);
    }

    #[test]
    fn rational_xi_closed_form() {
        // h = 1/(1+r), f = ln(1+r)/r
        let m = xi_model("t/(1+t)", 2);
        for &r in &[1e-9, 1e-4, 0.3, 1.0, 17.0, 1e5, 9e7] {
            let st = m.state_at_r(r).unwrap();
            assert!((st.h * (1.0 + r) - 1.0).abs() < 1e-12, "{r}");
            let f = r.ln_1p() / r;
            assert!((st.f / f - 1.0).abs() < 1e-11, "{r} {} {f}", st.f);
            assert!((st.d - (st.v - r / (1.0 + r))).abs() < 1e-10 * st.v.max(1e-300), "{r}");
        }
    }

    #[test]
    fn inversions_round_trip() {
        let m = xi_model("0.5*t/(1+t)", 3);
        for &r in &[1e-6, 0.5, 3.0, 4e4] {
            let st = m.state_at_r(r).unwrap();
            let bx = m.state_at_x(st.x).unwrap();
            let bs = m.state_at_s(st.s).unwrap();
            assert!((bx.r / r - 1.0).abs() < 1e-10, "{r} {}", bx.r);
            assert!((bs.r / r - 1.0).abs() < 1e-10, "{r} {}", bs.r);
        }
        assert!(m.state_at_r(2e8).is_err());
        assert!(m.v_at_s(m.s_end() * 2.0).is_err());
    }

    #[test]
    fn x_domain_exponential() {
        let p = GeneratorProfile::parse(ProfileKind::Fpp, "exp(-t)").unwrap();
        let m = build_metric(&p, 2, &BuildOptions::default()).unwrap();
        for &x in &[0.01f64, 0.5, 3.0, 50.0] {
            let st = m.state_at_x(x).unwrap();
            let fp = 1.0 - (-x).exp();
            assert!((st.fprime - fp).abs() < 1e-12);
            assert!((st.x * st.x / (st.r * st.h) - 1.0).abs() < 1e-12);
            let back = m.state_at_r(st.r).unwrap();
            assert!((back.x / x - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn n_one_rejected() {
        let p = GeneratorProfile::<f64>::parse(ProfileKind::Xi, "0").unwrap();
        assert!(build_metric(&p, 1, &BuildOptions::default()).is_err());
    }

    #[test]
    fn invalid_profile_rejected() {
        let p = GeneratorProfile::<f64>::parse(ProfileKind::Xi, "2*t/(1+t)").unwrap();
        assert!(matches!(
            build_metric(&p, 2, &BuildOptions::default()),
            Err(Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn single_precision_builds() {
        let p = GeneratorProfile::<f32>::parse(ProfileKind::Xi, "t/(1+t)").unwrap();
        let m = build_metric(&p, 2, &BuildOptions::default().with_grid(512)).unwrap();
        let st = m.state_at_r(1.0).unwrap();
        assert!((st.h - 0.5).abs() < 1e-4);
    }
}
