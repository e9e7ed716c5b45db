//! Log-log growth fits and the growth of the coordinate radius.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::MetricModel;
use crate::numerics::fit::least_squares;
use crate::scalar::Real;

use super::{default_s_grid, BallIntegralSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Bounded,
    UnboundedGrowth,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthThresholds<T> {
    pub unbounded_slope: T,
    pub bounded_slope: T,
    pub max_residual: T,
    pub cauchy_tolerance: T,
}

impl<T: Real> Default for GrowthThresholds<T> {
    fn default() -> Self {
        Self {
            unbounded_slope: T::lit(0.1),
            bounded_slope: T::lit(0.05),
            max_residual: T::lit(0.1),
            cauchy_tolerance: T::lit(0.01),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit<T> {
    /// `d log(normalized) / d log s`.
    pub slope: T,
    pub intercept: T,
    pub window: (T, T),
    /// RMS deviation from the fitted line in log space.
    pub residual: T,
    /// `(max - min) / max |value|` over the window.
    pub spread: T,
    pub verdict: Verdict,
}

/// Fit over the trailing `window_fraction` of the rows (at least 16 rows).
pub fn growth_fit<T: Real>(series: &BallIntegralSeries<T>, window_fraction: T) -> Result<GrowthFit<T>> {
    let n = series.rows.len();
    if n < 16 {
        return Err(Error::InvalidArgument(format!("growth fit needs 16 rows, got {n}")));
    }
    if !(window_fraction > T::zero() && window_fraction <= T::one()) {
        return Err(Error::out_of_range("window_fraction", window_fraction.as_f64(), 0.0, 1.0));
    }
    let take = (window_fraction * T::from_usize_lossy(n)).ceil().to_usize().unwrap_or(n).clamp(2, n);
    let rows = &series.rows[n - take..];
    let s: Vec<T> = rows.iter().map(|r| r.s).collect();
    let y: Vec<T> = rows.iter().map(|r| r.normalized).collect();
    growth_fit_with(&s, &y, &GrowthThresholds::default())
}

/// Fit over the rows with `s_lo ≤ s ≤ s_hi`.
pub fn growth_fit_window<T: Real>(series: &BallIntegralSeries<T>, s_lo: T, s_hi: T) -> Result<GrowthFit<T>> {
    let rows: Vec<_> = series.rows.iter().filter(|r| r.s >= s_lo && r.s <= s_hi).collect();
    if rows.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "window [{s_lo}, {s_hi}] holds {} rows, need 3",
            rows.len()
        )));
    }
    let s: Vec<T> = rows.iter().map(|r| r.s).collect();
    let y: Vec<T> = rows.iter().map(|r| r.normalized).collect();
    growth_fit_with(&s, &y, &GrowthThresholds::default())
}

/// Fit `log y` against `log s` and classify.
///
/// Verdicts: growth when the slope exceeds `unbounded_slope` on a good fit;
/// bounded when the slope is flat, the values agree to `cauchy_tolerance`, or
/// the values decrease on a good fit.
pub fn growth_fit_with<T: Real>(s: &[T], y: &[T], th: &GrowthThresholds<T>) -> Result<GrowthFit<T>> {
    if s.len() != y.len() || s.len() < 2 {
        return Err(Error::InvalidArgument("growth fit needs matching rows".into()));
    }
    let window = (s[0], s[s.len() - 1]);
    let tiny = T::min_positive_value();
    if y.iter().all(|v| v.abs() <= tiny) {
        return Ok(GrowthFit {
            slope: T::zero(),
            intercept: T::zero(),
            window,
            residual: T::zero(),
            spread: T::zero(),
            verdict: Verdict::Bounded,
        });
    }
    let (lx, ly): (Vec<T>, Vec<T>) = s
        .iter()
        .zip(y)
        .filter(|(_, v)| **v > T::zero())
        .map(|(s, v)| (s.ln(), v.ln()))
        .unzip();
    let scale = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let hi = y.iter().fold(T::neg_infinity(), |m, v| m.max(*v));
    let lo = y.iter().fold(T::infinity(), |m, v| m.min(*v));
    let spread = (hi - lo) / scale;
    let Some(fit) = least_squares(&lx, &ly) else {
        return Ok(GrowthFit {
            slope: T::nan(),
            intercept: T::nan(),
            window,
            residual: T::nan(),
            spread,
            verdict: if spread <= th.cauchy_tolerance { Verdict::Bounded } else { Verdict::Inconclusive },
        });
    };
    let good = fit.rms < th.max_residual;
    let verdict = if fit.slope > th.unbounded_slope && good {
        Verdict::UnboundedGrowth
    } else if fit.slope.abs() <= th.bounded_slope
        || spread <= th.cauchy_tolerance
        || (fit.slope < -th.bounded_slope && good)
    {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(GrowthFit {
        slope: fit.slope,
        intercept: fit.intercept,
        window,
        residual: fit.rms,
        spread,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateGrowth<T> {
    /// `log r` against `log s` over the trailing half of the s-grid.
    pub fit: GrowthFit<T>,
    /// Slopes over the trailing 1/2, 1/4 and 1/8 of the grid.
    pub nested_slopes: Vec<T>,
    /// Correlation of `log r` with `s` (not `log s`) over the trailing half.
    pub log_r_vs_s_correlation: T,
    /// Slopes keep increasing and `log r` is linear in `s`.
    pub superpolynomial: bool,
}

pub fn coordinate_growth<T: Real>(m: &MetricModel<T>) -> Result<CoordinateGrowth<T>> {
    let grid = default_s_grid(m, 64)?;
    let r: Vec<T> = grid
        .iter()
        .map(|s| m.state_at_s(*s).map(|st| st.r))
        .collect::<Result<_>>()?;
    let n = grid.len();
    let tail = |frac: usize| n - n / frac;
    let th = GrowthThresholds::default();
    let fit = growth_fit_with(&grid[tail(2)..], &r[tail(2)..], &th)?;
    let nested_slopes: Vec<T> = [2, 4, 8]
        .iter()
        .map(|f| growth_fit_with(&grid[tail(*f)..], &r[tail(*f)..], &th).map(|g| g.slope))
        .collect::<Result<_>>()?;
    let ln_r: Vec<T> = r[tail(2)..].iter().map(|v| v.ln()).collect();
    let corr = least_squares(&grid[tail(2)..], &ln_r).map_or(T::zero(), |f| f.correlation);
    let increasing = nested_slopes.windows(2).all(|w| w[1] > w[0])
        && nested_slopes[2] > nested_slopes[0] * T::lit(1.1);
    Ok(CoordinateGrowth {
        fit,
        nested_slopes,
        log_r_vs_s_correlation: corr,
        superpolynomial: increasing && corr > T::lit(0.999),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{Normalization, SeriesRow};

    fn make(values: impl Fn(f64) -> f64) -> BallIntegralSeries<f64> {
        let rows = (0..64)
            .map(|i| {
                let s = 10f64.powf(i as f64 / 16.0);
                SeriesRow { s, vol: 1.0, integral: values(s), normalized: values(s) }
            })
            .collect();
        BallIntegralSeries {
            density_name: "test".into(),
            k: None,
            normalization: Normalization::Power(0.0),
            rows,
        }
    }

    #[test]
    fn verdicts() {
        let g = growth_fit(&make(|s| s.powf(1.5)), 0.5).unwrap();
        assert!((g.slope - 1.5).abs() < 1e-12);
        assert_eq!(g.verdict, Verdict::UnboundedGrowth);
        let g = growth_fit(&make(|_| 0.0), 0.5).unwrap();
        assert_eq!((g.slope, g.verdict), (0.0, Verdict::Bounded));
        let g = growth_fit(&make(|s| 2.0 - 1.0 / s), 0.5).unwrap();
        assert_eq!(g.verdict, Verdict::Bounded);
        let g = growth_fit(&make(|s| 1.0 / s), 0.5).unwrap();
        assert_eq!(g.verdict, Verdict::Bounded);
        let g = growth_fit(&make(|s| (1.0 + s).ln()), 0.25).unwrap();
        assert_eq!(g.verdict, Verdict::UnboundedGrowth);
    }

    #[test]
    fn too_few_rows() {
        let mut s = make(|s| s);
        s.rows.truncate(10);
        assert!(growth_fit(&s, 0.5).is_err());
    }
}
