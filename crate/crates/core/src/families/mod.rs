//! Explicit metric families: the step counterexamples, S₃ ramps and smooth
//! baselines.

pub mod steps;

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metric::{build_metric, BuildOptions, MetricModel};
use crate::profile::{parse_expression, FamilyShape, GeneratorProfile, ProfileKind, ProfileSource};
use crate::scalar::Real;

pub use steps::{Ramp, StepFamilyDescriptor, StepShape};

/// Sharp rectangles as an F''-profile.
pub fn step_profile<T: Real>(d: StepFamilyDescriptor<T>) -> Result<GeneratorProfile<T>> {
    GeneratorProfile::steps(StepFamilyDescriptor {
        smoothing_width_factor: None,
        ..d
    })
}

/// Replace every rectangle edge of a step profile by a quintic ramp of width
/// `factor` times the step width.
pub fn smooth_step_profile<T: Real>(p: &GeneratorProfile<T>, factor: T) -> Result<GeneratorProfile<T>> {
    match &p.source {
        ProfileSource::Family(FamilyShape::Steps(s)) => {
            GeneratorProfile::steps(s.descriptor().smoothed(factor))
        }
        _ => Err(Error::InvalidArgument("smoothing needs a step profile".into())),
    }
}

/// Heights `l`, widths `l^{-5/2}`, `l = 2..=64`, edges smoothed over a quarter
/// of each width.
pub fn yau_descriptor<T: Real>() -> StepFamilyDescriptor<T> {
    StepFamilyDescriptor::new(T::one(), T::lit(2.5), 64).smoothed(T::lit(0.25))
}

/// The S₁ metric with bounded curvature whose normalized `σ_k` integrals grow
/// without bound (`2 ≤ k < n`).
pub fn yau_counterexample<T: Real>(n: usize, k: usize, opts: &BuildOptions<T>) -> Result<MetricModel<T>> {
    yau_counterexample_with(yau_descriptor(), n, k, opts)
}

pub fn yau_counterexample_with<T: Real>(
    d: StepFamilyDescriptor<T>,
    n: usize,
    k: usize,
    opts: &BuildOptions<T>,
) -> Result<MetricModel<T>> {
    if n < 3 {
        return Err(Error::out_of_range("n", n as f64, 3.0, f64::INFINITY));
    }
    if !(2..n).contains(&k) {
        return Err(Error::out_of_range("k", k as f64, 2.0, (n - 1) as f64));
    }
    build_metric(&GeneratorProfile::steps(d)?, n, opts)
}

/// Geodesic radii just past step `max(l_min, l_max/8)` and just past the last
/// step, the range over which a step family's growth is visible. `None` for
/// other profiles.
pub fn step_s_window<T: Real>(m: &MetricModel<T>) -> Result<Option<(T, T)>> {
    let ProfileSource::Family(FamilyShape::Steps(shape)) = &m.profile().source else {
        return Ok(None);
    };
    let d = shape.descriptor();
    let after = |l: u32| {
        let lt = T::from_u32(l).expect("step index");
        m.state_at_x(lt + lt.powf(-d.width_exponent)).map(|st| st.s)
    };
    let first = d.l_min.max(d.l_max / 8);
    if first >= d.l_max {
        return Ok(None);
    }
    Ok(Some((after(first)?, after(d.l_max)?)))
}

/// `1 + α < β < p(α - 1) + 2` with `α > 1`, `p > 1`.
pub fn check_lp_constraint<T: Real>(p: T, alpha: T, beta: T) -> Result<()> {
    let one = T::one();
    if !(p > one) {
        return Err(Error::out_of_range("p", p.as_f64(), 1.0, f64::INFINITY));
    }
    if !(alpha > one) {
        return Err(Error::out_of_range("alpha", alpha.as_f64(), 1.0, f64::INFINITY));
    }
    let lo = one + alpha;
    let hi = p * (alpha - one) + T::lit(2.0);
    if !(beta > lo && beta < hi) {
        return Err(Error::out_of_range("beta", beta.as_f64(), lo.as_f64(), hi.as_f64()));
    }
    Ok(())
}

pub fn lp_descriptor<T: Real>(alpha: T, beta: T) -> StepFamilyDescriptor<T> {
    StepFamilyDescriptor::new(alpha, beta, 64).smoothed(T::lit(0.25))
}

/// Euclidean volume growth with divergent normalized `∫ A^p`.
pub fn lp_counterexample<T: Real>(
    n: usize,
    p: T,
    alpha: T,
    beta: T,
    opts: &BuildOptions<T>,
) -> Result<MetricModel<T>> {
    lp_counterexample_with(lp_descriptor(alpha, beta), n, p, opts)
}

pub fn lp_counterexample_with<T: Real>(
    d: StepFamilyDescriptor<T>,
    n: usize,
    p: T,
    opts: &BuildOptions<T>,
) -> Result<MetricModel<T>> {
    check_lp_constraint(p, d.height_exponent, d.width_exponent)?;
    build_metric(&GeneratorProfile::steps(d)?, n, opts)
}

/// ξ ramping from 0 at `r0/2` to 1 at `r0`.
pub fn s3_profile<T: Real>(r0: T) -> Result<GeneratorProfile<T>> {
    if !(r0 > T::zero() && r0.is_finite()) {
        return Err(Error::out_of_range("r0", r0.as_f64(), 0.0, f64::INFINITY));
    }
    GeneratorProfile::ramp(ProfileKind::Xi, T::lit(0.5) * r0, r0)
}

pub fn s3_metric<T: Real>(n: usize, r0: T, opts: &BuildOptions<T>) -> Result<MetricModel<T>> {
    build_metric(&s3_profile(r0)?, n, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XiShape {
    /// `a t / (1 + t)`.
    Rational,
    /// `a (1 - e^{-t})`.
    Exponential,
}

impl FromStr for XiShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(Self::Rational),
            "exponential" => Ok(Self::Exponential),
            other => Err(Error::InvalidArgument(format!("unknown shape `{other}`"))),
        }
    }
}

/// Smooth ξ-profiles with `ξ(∞) = a`.
pub fn polynomial_xi<T: Real>(a: T, shape: XiShape) -> Result<GeneratorProfile<T>> {
    if !(a >= T::zero() && a <= T::one()) {
        return Err(Error::out_of_range("a", a.as_f64(), 0.0, 1.0));
    }
    let a = a.as_f64();
    let src = match shape {
        XiShape::Rational => format!("{a:?}*t/(1+t)"),
        XiShape::Exponential => format!("{a:?}*(1-exp(-t))"),
    };
    Ok(GeneratorProfile::closed_form(ProfileKind::Xi, parse_expression(&src)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyName {
    Yau,
    Lp,
    S3,
    Poly,
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yau" => Ok(Self::Yau),
            "lp" => Ok(Self::Lp),
            "s3" => Ok(Self::S3),
            "poly" => Ok(Self::Poly),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

/// A family name plus textual parameters, as read from flags or files.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub family: FamilyName,
    pub params: BTreeMap<String, String>,
}

impl FamilySpec {
    const KEYS: [(FamilyName, &'static [&'static str]); 4] = [
        (FamilyName::Yau, &["lmax", "q", "factor"]),
        (FamilyName::Lp, &["p", "alpha", "beta", "lmax", "factor"]),
        (FamilyName::S3, &["r0"]),
        (FamilyName::Poly, &["a", "shape"]),
    ];

    pub fn new(name: &str, params: BTreeMap<String, String>) -> Result<Self> {
        let family: FamilyName = name.parse()?;
        let allowed = Self::KEYS.iter().find(|(f, _)| *f == family).expect("listed").1;
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "family `{name}` has no parameter `{bad}`"
            )));
        }
        Ok(Self { family, params })
    }

    fn real<T: Real>(&self, key: &str, default: f64) -> Result<T> {
        match self.params.get(key) {
            None => Ok(T::lit(default)),
            Some(v) => v
                .trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| Error::InvalidArgument(format!("`{key}` is not a number: `{v}`"))),
        }
    }

    fn count(&self, key: &str, default: u32) -> Result<u32> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("`{key}` is not a count: `{v}`"))),
        }
    }

    /// The generating profile with defaults filled in.
    pub fn profile<T: Real>(&self) -> Result<GeneratorProfile<T>> {
        match self.family {
            FamilyName::Yau => {
                let d = StepFamilyDescriptor::new(T::one(), self.real("q", 2.5)?, self.count("lmax", 64)?)
                    .smoothed(self.real("factor", 0.25)?);
                GeneratorProfile::steps(d)
            }
            FamilyName::Lp => {
                let (p, alpha, beta) = (self.real("p", 2.0)?, self.real("alpha", 2.0)?, self.real("beta", 3.5)?);
                check_lp_constraint(p, alpha, beta)?;
                let d = StepFamilyDescriptor::new(alpha, beta, self.count("lmax", 64)?)
                    .smoothed(self.real("factor", 0.25)?);
                GeneratorProfile::steps(d)
            }
            FamilyName::S3 => s3_profile(self.real("r0", 1.0)?),
            FamilyName::Poly => {
                let shape = match self.params.get("shape") {
                    Some(s) => s.parse()?,
                    None => XiShape::Rational,
                };
                polynomial_xi(self.real("a", 0.5)?, shape)
            }
        }
    }

    /// `p` of the L^p family (2 unless given).
    pub fn lp_exponent<T: Real>(&self) -> Result<T> {
        self.real("p", 2.0)
    }

    pub fn build<T: Real>(&self, n: usize, k: Option<usize>, opts: &BuildOptions<T>) -> Result<MetricModel<T>> {
        let p = self.profile()?;
        if self.family == FamilyName::Yau {
            if n < 3 {
                return Err(Error::out_of_range("n", n as f64, 3.0, f64::INFINITY));
            }
            if let Some(k) = k {
                if !(2..n).contains(&k) {
                    return Err(Error::out_of_range("k", k as f64, 2.0, (n - 1) as f64));
                }
            }
        }
        build_metric(&p, n, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricClass;
    use crate::profile::validate_xi;

    #[test]
    fn lp_constraint_gate() {
        assert!(check_lp_constraint(2.0, 2.0, 3.5).is_ok());
        assert!(check_lp_constraint(2.0, 2.0, 4.0).is_err());
        assert!(check_lp_constraint(3.0, 2.0, 4.0).is_ok());
        assert!(check_lp_constraint(2.0, 1.0, 2.5).is_err());
        assert!(check_lp_constraint(2.0, 2.0, 3.0 + 1e-9).is_ok());
        assert!(check_lp_constraint(2.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn polynomial_profiles_validate() {
        for shape in [XiShape::Rational, XiShape::Exponential] {
            for a in [0.0f64, 0.25, 0.5, 1.0] {
                let p = polynomial_xi(a, shape).unwrap();
                assert!(validate_xi(&p, &p.default_grid()).ok);
                assert!((p.eval(1e12).unwrap() - a).abs() < 1e-11);
            }
        }
        assert!(polynomial_xi(1.5, XiShape::Rational).is_err());
    }

    #[test]
    fn yau_pre_conditions() {
        let o = BuildOptions::<f64>::default().with_grid(64);
        assert!(yau_counterexample(2, 2, &o).is_err());
        assert!(yau_counterexample(3, 3, &o).is_err());
        assert!(yau_counterexample(3, 1, &o).is_err());
    }

    #[test]
    fn smoothing_requires_steps() {
        let p = polynomial_xi(0.5, XiShape::Rational).unwrap();
        assert!(smooth_step_profile(&p, 0.25).is_err());
        let s = step_profile(StepFamilyDescriptor::new(1.0, 2.5, 8)).unwrap();
        let sm = smooth_step_profile(&s, 0.25).unwrap();
        let (m0, m1) = (s.antiderivative(f64::INFINITY).unwrap(), sm.antiderivative(f64::INFINITY).unwrap());
        assert!((m1 / m0 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn family_spec_parsing() {
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), "0.5".to_string());
        let spec = FamilySpec::new("poly", params).unwrap();
        let m = spec.build::<f64>(2, None, &BuildOptions::default().with_grid(512)).unwrap();
        assert_eq!(m.classification().class, MetricClass::S1);
        let mut bad = BTreeMap::new();
        bad.insert("zeta".to_string(), "1".to_string());
        assert!(FamilySpec::new("poly", bad).is_err());
        assert!(FamilySpec::new("torus", BTreeMap::new()).is_err());
    }
}
