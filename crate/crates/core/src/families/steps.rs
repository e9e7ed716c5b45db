//! Piecewise generator shapes: rectangle trains and single ramps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{smoothstep, smoothstep_derivatives, smoothstep_integral};
use crate::scalar::Real;

/// Rectangles of height `l^height_exponent` on `[l, l + l^-width_exponent]`
/// for `l = l_min..=l_max`, optionally with smoothed edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFamilyDescriptor<T> {
    pub height_exponent: T,
    pub width_exponent: T,
    pub l_min: u32,
    pub l_max: u32,
    /// Edge transition width as a fraction of the step width; `None` keeps
    /// sharp rectangles.
    pub smoothing_width_factor: Option<T>,
}

impl<T: Real> StepFamilyDescriptor<T> {
    pub fn new(height_exponent: T, width_exponent: T, l_max: u32) -> Self {
        Self {
            height_exponent,
            width_exponent,
            l_min: 2,
            l_max,
            smoothing_width_factor: None,
        }
    }

    pub fn smoothed(mut self, factor: T) -> Self {
        self.smoothing_width_factor = Some(factor);
        self
    }
}

#[derive(Clone, Copy, Debug)]
struct Step<T> {
    start: T,
    width: T,
    height: T,
    /// Edge ramp width (zero for sharp steps).
    edge: T,
    /// Integral of the step.
    mass: T,
}

impl<T: Real> Step<T> {
    fn end(&self) -> T {
        self.start + self.width
    }

    /// Normalised profile and its derivatives at `x` inside `[start, end]`.
    fn shape(&self, x: T) -> (T, T, T) {
        if self.edge == T::zero() {
            return (T::one(), T::zero(), T::zero());
        }
        let e = self.edge;
        let up = (x - self.start) / e;
        let down = (self.end() - x) / e;
        if up < T::one() {
            let (d1, d2) = smoothstep_derivatives(up);
            (smoothstep(up), d1 / e, d2 / (e * e))
        } else if down < T::one() {
            let (d1, d2) = smoothstep_derivatives(down);
            (smoothstep(down), -d1 / e, d2 / (e * e))
        } else {
            (T::one(), T::zero(), T::zero())
        }
    }

    /// Integral of the step over `[start, x]`.
    fn partial_mass(&self, x: T) -> T {
        if x <= self.start {
            return T::zero();
        }
        if x >= self.end() {
            return self.mass;
        }
        if self.edge == T::zero() {
            return self.height * (x - self.start);
        }
        let e = self.edge;
        let up = smoothstep_integral((x - self.start) / e) * e;
        let z = (self.end() - x) / e;
        // the extended up-ramp counts the down-ramp region as a plateau
        let missing = if z < T::one() {
            e * (T::one() - z - T::lit(0.5) + smoothstep_integral(z))
        } else {
            T::zero()
        };
        let body = up - missing;
        self.height * body
    }
}

/// Evaluated rectangle train with exact running integral.
#[derive(Clone, Debug)]
pub struct StepShape<T> {
    descriptor: StepFamilyDescriptor<T>,
    steps: Vec<Step<T>>,
    /// `cumulative[i]` = total mass of the steps before step `i`.
    cumulative: Vec<T>,
}

impl<T: Real> StepShape<T> {
    pub fn new(d: StepFamilyDescriptor<T>) -> Result<Self> {
        if d.l_min < 1 || d.l_max < d.l_min {
            return Err(Error::InvalidArgument(format!(
                "step range {}..={} is empty",
                d.l_min, d.l_max
            )));
        }
        if !(d.height_exponent.is_finite() && d.width_exponent.is_finite()) {
            return Err(Error::InvalidArgument("non-finite step exponent".into()));
        }
        let factor = d.smoothing_width_factor.unwrap_or(T::zero());
        if d.smoothing_width_factor.is_some() && !(factor > T::zero() && factor < T::lit(0.5)) {
            return Err(Error::out_of_range(
                "smoothing_width_factor",
                factor.as_f64(),
                0.0,
                0.5,
            ));
        }
        let mut steps = Vec::with_capacity((d.l_max - d.l_min + 1) as usize);
        for l in d.l_min..=d.l_max {
            let lt = T::from_u32(l).expect("step index");
            let width = lt.powf(-d.width_exponent);
            if width >= T::one() {
                return Err(Error::InvalidArgument(format!(
                    "step {l} of width {width} overlaps step {}",
                    l + 1
                )));
            }
            let height = lt.powf(d.height_exponent);
            let edge = factor * width;
            steps.push(Step {
                start: lt,
                width,
                height,
                edge,
                mass: height * (width - edge),
            });
        }
        let mut cumulative = Vec::with_capacity(steps.len() + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for s in &steps {
            acc = acc + s.mass;
            cumulative.push(acc);
        }
        Ok(Self { descriptor: d, steps, cumulative })
    }

    pub fn descriptor(&self) -> &StepFamilyDescriptor<T> {
        &self.descriptor
    }

    fn locate(&self, x: T) -> Option<usize> {
        if x < T::from_u32(self.descriptor.l_min).expect("index") {
            return None;
        }
        let l = x.floor().to_u64()?;
        if l > self.descriptor.l_max as u64 {
            return None;
        }
        Some((l - self.descriptor.l_min as u64) as usize)
    }

    /// Value and first two derivatives at `x`.
    pub fn jet(&self, x: T) -> (T, T, T) {
        match self.locate(x) {
            Some(i) => {
                let s = &self.steps[i];
                if x >= s.start && x <= s.end() {
                    let (v, d1, d2) = s.shape(x);
                    (s.height * v, s.height * d1, s.height * d2)
                } else {
                    (T::zero(), T::zero(), T::zero())
                }
            }
            None => (T::zero(), T::zero(), T::zero()),
        }
    }

    /// `∫_0^x` of the profile.
    pub fn integral(&self, x: T) -> T {
        if x < T::from_u32(self.descriptor.l_min).expect("index") {
            return T::zero();
        }
        match self.locate(x) {
            Some(i) => self.cumulative[i] + self.steps[i].partial_mass(x),
            None => self.total_mass(),
        }
    }

    pub fn total_mass(&self) -> T {
        *self.cumulative.last().expect("nonempty")
    }

    /// Sharp-rectangle mass `Σ height·width` (smoothing ignored).
    pub fn rectangle_mass(&self) -> T {
        self.steps.iter().map(|s| s.height * s.width).sum()
    }

    /// Points where the profile is not smooth, within `[lo, hi]`.
    pub fn breakpoints(&self, lo: T, hi: T) -> Vec<T> {
        let mut out = Vec::new();
        for s in &self.steps {
            let pts = if s.edge > T::zero() {
                vec![s.start, s.start + s.edge, s.end() - s.edge, s.end()]
            } else {
                vec![s.start, s.end()]
            };
            out.extend(pts.into_iter().filter(|p| *p >= lo && *p <= hi));
        }
        out
    }

    /// `(start, width, height)` for every step.
    pub fn steps(&self) -> Vec<(T, T, T)> {
        self.steps.iter().map(|s| (s.start, s.width, s.height)).collect()
    }
}

/// Quintic ramp from 0 at `start` to 1 at `end`, constant outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ramp<T> {
    pub start: T,
    pub end: T,
}

impl<T: Real> Ramp<T> {
    pub fn new(start: T, end: T) -> Result<Self> {
        if !(start >= T::zero() && end > start && end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ramp needs 0 <= start < end, got [{start}, {end}]"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn jet(&self, t: T) -> (T, T, T) {
        let w = self.end - self.start;
        let u = (t - self.start) / w;
        let (d1, d2) = smoothstep_derivatives(u);
        (smoothstep(u), d1 / w, d2 / (w * w))
    }

    pub fn breakpoints(&self, lo: T, hi: T) -> Vec<T> {
        [self.start, self.end]
            .into_iter()
            .filter(|p| *p >= lo && *p <= hi)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::{integrate, QuadratureOptions};

    #[test]
    fn first_yau_step() {
        let d = StepFamilyDescriptor::new(1.0, 2.5, 2);
        let s = StepShape::new(d).unwrap();
        let w = 2f64.powf(-2.5);
        assert_eq!(s.steps(), vec![(2.0, w, 2.0)]);
        assert!((s.total_mass() - 2f64.powf(-1.5)).abs() < 1e-15);
        assert_eq!(s.jet(2.0 + w / 2.0).0, 2.0);
        assert_eq!(s.jet(2.0 + 1.5 * w).0, 0.0);
    }

    #[test]
    fn overlap_rejected() {
        let d = StepFamilyDescriptor::new(1.0, 0.0, 4);
        assert!(StepShape::new(d).is_err());
        let d = StepFamilyDescriptor::new(1.0, 2.5, 4).smoothed(0.6);
        assert!(StepShape::new(d).is_err());
    }

    #[test]
    fn smoothed_integral_matches_quadrature() {
        let d = StepFamilyDescriptor::new(2.0f64, 3.5, 12).smoothed(0.25);
        let s = StepShape::new(d).unwrap();
        let mut pts = vec![0.0];
        pts.extend(s.breakpoints(0.0, 20.0));
        pts.push(20.0);
        let opts = QuadratureOptions::default().with_rel_tol(1e-12);
        let mut acc = 0.0;
        for w in pts.windows(2) {
            acc += integrate(|x| s.jet(x).0, w[0], w[1], &opts).unwrap().value;
            let exact = s.integral(w[1]);
            assert!((acc - exact).abs() < 1e-12 * (1.0 + exact), "{} {acc} {exact}", w[1]);
        }
        let ratio = s.total_mass() / s.rectangle_mass();
        assert!((ratio - 0.75).abs() < 1e-12);
    }

    #[test]
    fn smoothed_derivatives_consistent() {
        let d = StepFamilyDescriptor::new(1.0, 2.5, 5).smoothed(0.25);
        let s = StepShape::new(d).unwrap();
        let w = 3f64.powf(-2.5);
        for frac in [0.05, 0.2, 0.5, 0.85, 0.97] {
            let x = 3.0 + frac * w;
            let h = 1e-7 * w;
            let fd = (s.jet(x + h).0 - s.jet(x - h).0) / (2.0 * h);
            let (_, d1, _) = s.jet(x);
            assert!((fd - d1).abs() < 1e-5 * (1.0 + d1.abs()), "{frac} {fd} {d1}");
        }
    }

    #[test]
    fn ramp_shape() {
        let r = Ramp::new(0.5f64, 1.0).unwrap();
        assert_eq!(r.jet(0.2).0, 0.0);
        assert_eq!(r.jet(1.0).0, 1.0);
        assert_eq!(r.jet(7.0), (1.0, 0.0, 0.0));
        assert!((r.jet(0.75).0 - 0.5).abs() < 1e-15);
    }
}
