//! Generator profiles: the radial function a metric is built from.

pub mod expr;
pub mod file;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::steps::{Ramp, StepFamilyDescriptor, StepShape};
use crate::numerics::fit::geometric_limit;
use crate::numerics::log_spaced;
use crate::numerics::pchip::Pchip;
use crate::numerics::quadrature::{integrate, QuadratureOptions};
use crate::scalar::Real;

pub use expr::{parse_expression, BinaryOp, Expr, Jet, UnaryOp};

/// Which radial function a profile describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `ξ(r) = -r h'(r) / h(r)`.
    Xi,
    /// `F''(x)`.
    Fpp,
    /// `h(r) = (r f)'`.
    H,
}

impl std::str::FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "xi" => Ok(Self::Xi),
            "fpp" => Ok(Self::Fpp),
            "h" => Ok(Self::H),
            other => Err(Error::InvalidArgument(format!("unknown profile kind `{other}`"))),
        }
    }
}

/// Closed-form families with analytic structure.
#[derive(Clone, Debug)]
pub enum FamilyShape<T> {
    Steps(Arc<StepShape<T>>),
    Ramp(Ramp<T>),
}

#[derive(Clone, Debug)]
pub enum ProfileSource<T> {
    ClosedForm(Expr),
    Sampled(Pchip<T>),
    Family(FamilyShape<T>),
}

#[derive(Clone, Debug)]
pub struct GeneratorProfile<T> {
    pub kind: ProfileKind,
    pub source: ProfileSource<T>,
    /// Last admissible argument; `+∞` for unbounded domains.
    pub domain_end: T,
}

impl<T: Real> GeneratorProfile<T> {
    pub fn closed_form(kind: ProfileKind, expr: Expr) -> Self {
        Self {
            kind,
            source: ProfileSource::ClosedForm(expr),
            domain_end: T::infinity(),
        }
    }

    pub fn parse(kind: ProfileKind, src: &str) -> Result<Self> {
        Ok(Self::closed_form(kind, parse_expression(src)?))
    }

    /// Monotone cubic through `(t, value)` samples; abscissae must start at 0.
    pub fn sampled(kind: ProfileKind, t: Vec<T>, values: Vec<T>) -> Result<Self> {
        if t.first() != Some(&T::zero()) {
            return Err(Error::InvalidProfile("samples must start at t = 0".into()));
        }
        let p = Pchip::new(t, values)?;
        let end = p.domain().1;
        Ok(Self {
            kind,
            source: ProfileSource::Sampled(p),
            domain_end: end,
        })
    }

    pub fn steps(descriptor: StepFamilyDescriptor<T>) -> Result<Self> {
        Ok(Self {
            kind: ProfileKind::Fpp,
            source: ProfileSource::Family(FamilyShape::Steps(Arc::new(StepShape::new(descriptor)?))),
            domain_end: T::infinity(),
        })
    }

    pub fn ramp(kind: ProfileKind, start: T, end: T) -> Result<Self> {
        Ok(Self {
            kind,
            source: ProfileSource::Family(FamilyShape::Ramp(Ramp::new(start, end)?)),
            domain_end: T::infinity(),
        })
    }

    fn check_domain(&self, t: T) -> Result<()> {
        if !(t >= T::zero()) {
            return Err(Error::Domain {
                what: "negative argument",
                at: t.as_f64(),
            });
        }
        if t > self.domain_end {
            return Err(Error::Extrapolation {
                t: t.as_f64(),
                end: self.domain_end.as_f64(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, t: T) -> Result<T> {
        self.check_domain(t)?;
        match &self.source {
            ProfileSource::ClosedForm(e) => e.eval(t),
            ProfileSource::Sampled(p) => p.eval(t),
            ProfileSource::Family(FamilyShape::Steps(s)) => Ok(s.jet(t).0),
            ProfileSource::Family(FamilyShape::Ramp(r)) => Ok(r.jet(t).0),
        }
    }

    /// Value, first and second derivative.
    pub fn eval_jet(&self, t: T) -> Result<Jet<T>> {
        self.check_domain(t)?;
        let (value, d1, d2) = match &self.source {
            ProfileSource::ClosedForm(e) => {
                let j = e.eval_jet(t)?;
                (j.value, j.d1, j.d2)
            }
            ProfileSource::Sampled(p) => p.eval_jet(t)?,
            ProfileSource::Family(FamilyShape::Steps(s)) => s.jet(t),
            ProfileSource::Family(FamilyShape::Ramp(r)) => r.jet(t),
        };
        Ok(Jet { value, d1, d2 })
    }

    /// Exact `∫_0^t` when the source provides one.
    pub fn antiderivative(&self, t: T) -> Option<T> {
        match &self.source {
            ProfileSource::Family(FamilyShape::Steps(s)) => Some(s.integral(t)),
            _ => None,
        }
    }

    /// Points in `[lo, hi]` where the profile may fail to be smooth.
    pub fn breakpoints(&self, lo: T, hi: T) -> Vec<T> {
        match &self.source {
            ProfileSource::ClosedForm(_) => Vec::new(),
            ProfileSource::Sampled(p) => p.knots().iter().copied().filter(|k| *k >= lo && *k <= hi).collect(),
            ProfileSource::Family(FamilyShape::Steps(s)) => s.breakpoints(lo, hi),
            ProfileSource::Family(FamilyShape::Ramp(r)) => r.breakpoints(lo, hi),
        }
    }

    /// 512 log-spaced points on `[1e-8, domain_end or 1e8]`, preceded by 0.
    pub fn default_grid(&self) -> Vec<T> {
        let end = if self.domain_end.is_finite() {
            self.domain_end
        } else {
            T::lit(1e8)
        };
        let lo = T::lit(1e-8).min(end * T::lit(1e-3));
        let mut g = vec![T::zero()];
        g.extend(log_spaced(lo, end, 512));
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: String,
    pub t: f64,
    pub observed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub grid_used: Vec<f64>,
    /// `F'(∞) = ∫_0^∞ F''` when it converges (Fpp profiles only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fprime_infinity: Option<f64>,
    /// Whether `∫_0^∞ F''` was judged convergent (Fpp profiles only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fprime_converges: Option<bool>,
}

impl ValidationReport {
    fn new(grid: &[f64], violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
            grid_used: grid.to_vec(),
            fprime_infinity: None,
            fprime_converges: None,
        }
    }
}

fn violation<T: Real>(condition: &str, t: T, observed: T) -> Violation {
    Violation {
        condition: condition.to_string(),
        t: t.as_f64(),
        observed: observed.as_f64(),
    }
}

fn sample_grid<T: Real>(p: &GeneratorProfile<T>, grid: &[T], out: &mut Vec<Violation>) -> Vec<Option<T>> {
    grid.iter()
        .map(|&t| match p.eval(t) {
            Ok(v) => Some(v),
            Err(_) => {
                out.push(violation("evaluable", t, T::nan()));
                None
            }
        })
        .collect()
}

/// Check `ξ(0) = 0`, `ξ' ≥ 0` and `ξ ≤ 1` on `grid`.
pub fn validate_xi<T: Real>(p: &GeneratorProfile<T>, grid: &[T]) -> ValidationReport {
    let mut violations = Vec::new();
    if p.kind != ProfileKind::Xi {
        violations.push(violation("kind_is_xi", T::zero(), T::nan()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        violations.push(violation("grid_increasing", T::zero(), T::nan()));
    }
    let values = sample_grid(p, grid, &mut violations);
    match p.eval(T::zero()) {
        Ok(v) if v.abs() <= T::lit(1e-12) => {}
        Ok(v) => violations.push(violation("xi_zero_at_origin", T::zero(), v)),
        Err(_) if grid.first() == Some(&T::zero()) => {}
        Err(_) => violations.push(violation("evaluable", T::zero(), T::nan())),
    }
    for (i, w) in grid.windows(2).enumerate() {
        if let (Some(a), Some(b)) = (values[i], values[i + 1]) {
            let slope = (b - a) / (w[1] - w[0]);
            if slope < T::lit(-1e-9) {
                violations.push(violation("xi_nondecreasing", w[0], slope));
            }
        }
    }
    for (t, v) in grid.iter().zip(&values) {
        if let Some(v) = v {
            if *v > T::one() + T::lit(1e-12) {
                violations.push(violation("xi_at_most_one", *t, *v));
            }
        }
    }
    let g: Vec<f64> = grid.iter().map(|t| t.as_f64()).collect();
    ValidationReport::new(&g, violations)
}

/// Check `F'' ≥ 0` on the default grid and estimate `F'(∞)`.
pub fn validate_f<T: Real>(p: &GeneratorProfile<T>) -> ValidationReport {
    let grid = p.default_grid();
    let mut violations = Vec::new();
    if p.kind != ProfileKind::Fpp {
        violations.push(violation("kind_is_fpp", T::zero(), T::nan()));
    }
    let values = sample_grid(p, &grid, &mut violations);
    for (t, v) in grid.iter().zip(&values) {
        if let Some(v) = v {
            if *v < T::lit(-1e-9) {
                violations.push(violation("fpp_nonnegative", *t, *v));
            }
        }
    }
    let g: Vec<f64> = grid.iter().map(|t| t.as_f64()).collect();
    let mut report = ValidationReport::new(&g, violations);
    if report.ok {
        let (limit, converges) = fprime_limit(p, &grid);
        report.fprime_infinity = limit.map(|v| v.as_f64());
        report.fprime_converges = Some(converges);
    }
    report
}

/// `∫_0^end F''` sampled at the last three decades of the grid.
fn fprime_limit<T: Real>(p: &GeneratorProfile<T>, grid: &[T]) -> (Option<T>, bool) {
    let end = *grid.last().expect("grid");
    if let Some(total) = p.antiderivative(T::infinity()) {
        return (Some(total), true);
    }
    let mut nodes: Vec<T> = grid.to_vec();
    nodes.extend(p.breakpoints(T::zero(), end));
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    nodes.dedup();
    let opts = QuadratureOptions::default().with_rel_tol(T::lit(1e-10));
    let marks = [end / T::lit(100.0), end / T::lit(10.0), end];
    let mut sums = [T::zero(); 3];
    let mut acc = T::zero();
    let mut m = 0;
    for w in nodes.windows(2) {
        let est = match integrate(|t| p.eval(t).unwrap_or(T::nan()), w[0], w[1], &opts) {
            Ok(e) => e.value,
            Err(_) => return (None, false),
        };
        acc = acc + est;
        while m < 3 && w[1] >= marks[m] {
            sums[m] = acc;
            m += 1;
        }
    }
    while m < 3 {
        sums[m] = acc;
        m += 1;
    }
    if p.domain_end.is_finite() {
        return (Some(sums[2]), true);
    }
    let d1 = sums[1] - sums[0];
    let d2 = sums[2] - sums[1];
    let scale = T::one() + sums[2].abs();
    let negligible = d2.abs() <= T::lit(1e-9) * scale;
    if negligible || (d1 > T::zero() && d2 <= T::lit(0.5) * d1) {
        (Some(geometric_limit(sums[0], sums[1], sums[2])), true)
    } else {
        (None, false)
    }
}

/// Check `h > 0` and finiteness on the default grid.
pub fn validate_h<T: Real>(p: &GeneratorProfile<T>) -> ValidationReport {
    let grid = p.default_grid();
    let mut violations = Vec::new();
    if p.kind != ProfileKind::H {
        violations.push(violation("kind_is_h", T::zero(), T::nan()));
    }
    let values = sample_grid(p, &grid, &mut violations);
    for (t, v) in grid.iter().zip(&values) {
        if let Some(v) = v {
            if !(*v > T::zero()) {
                violations.push(violation("h_positive", *t, *v));
            }
        }
    }
    let g: Vec<f64> = grid.iter().map(|t| t.as_f64()).collect();
    ValidationReport::new(&g, violations)
}

/// Dispatch on the profile kind with default grids.
pub fn validate<T: Real>(p: &GeneratorProfile<T>) -> ValidationReport {
    match p.kind {
        ProfileKind::Xi => validate_xi(p, &p.default_grid()),
        ProfileKind::Fpp => validate_f(p),
        ProfileKind::H => validate_h(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(src: &str) -> GeneratorProfile<f64> {
        GeneratorProfile::parse(ProfileKind::Xi, src).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(xi("t/(1+t)").eval(1.0).unwrap(), 0.5);
        assert_eq!(xi("t/(1+t)").eval(0.0).unwrap(), 0.0);
        let s = GeneratorProfile::sampled(ProfileKind::Xi, vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.8]).unwrap();
        assert_eq!(s.eval(1.0).unwrap(), 0.5);
        assert!(matches!(s.eval(2.5), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn xi_validation_examples() {
        let p = xi("t/(1+t)");
        let grid: Vec<f64> = std::iter::once(0.0).chain(log_spaced(1e-8, 1e6, 400)).collect();
        assert!(validate_xi(&p, &grid).ok);
        let r = validate_xi(&xi("2*t/(1+t)"), &grid);
        assert!(!r.ok);
        assert!(r.violations.iter().all(|v| v.condition == "xi_at_most_one" && v.t > 1.0));
        let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        let s = GeneratorProfile::sampled(ProfileKind::Xi, t, v).unwrap();
        let r = validate(&s);
        assert!(r.violations.iter().any(|v| v.condition == "xi_nondecreasing" && v.t > 1.5));
        assert!(!validate(&xi("t + 1")).ok);
        assert!(!validate(&xi("ln(t)")).ok);
    }

    #[test]
    fn fpp_validation_examples() {
        let flat = validate_f(&GeneratorProfile::<f64>::parse(ProfileKind::Fpp, "0").unwrap());
        assert!(flat.ok);
        assert_eq!(flat.fprime_infinity, Some(0.0));
        let e = validate_f(&GeneratorProfile::<f64>::parse(ProfileKind::Fpp, "exp(-t)").unwrap());
        assert!(e.ok);
        assert!((e.fprime_infinity.unwrap() - 1.0).abs() < 1e-8);
        let neg = validate_f(&GeneratorProfile::<f64>::parse(ProfileKind::Fpp, "-1").unwrap());
        assert!(!neg.ok);
        let div = validate_f(&GeneratorProfile::<f64>::parse(ProfileKind::Fpp, "1/(1+t)").unwrap());
        assert!(div.ok);
        assert_eq!(div.fprime_converges, Some(false));
    }

    #[test]
    fn steps_report_exact_mass() {
        let d = StepFamilyDescriptor::new(1.0, 2.5, 2);
        let p = GeneratorProfile::steps(d).unwrap();
        let r = validate_f(&p);
        assert!(r.ok);
        assert!((r.fprime_infinity.unwrap() - 2f64.powf(-1.5)).abs() < 1e-15);
    }
}
