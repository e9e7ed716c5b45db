//! Numerical laboratory for U(n)-invariant Kähler metrics on ℂⁿ with
//! nonnegative bisectional curvature.
//!
//! A metric is generated by one radial function: `ξ(r) = -r h'/h`, `F''(x)`
//! or `h(r)` itself ([`profile`]). [`metric`] integrates it into the full set
//! of radial quantities and classifies its tail, [`curvature`] evaluates the
//! curvature components and Ricci quantities, and [`integrals`] integrates
//! curvature densities over geodesic balls and fits their growth.
//! [`families`] builds the step counterexamples and reference metrics.
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the pure curvature
//! algebra is generic over [`Algebra`] and also runs on exact rationals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod families;
pub mod integrals;
pub mod metric;
pub mod numerics;
pub mod profile;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Algebra, Real};

/// Double-precision aliases.
pub type Profile = profile::GeneratorProfile<f64>;
pub type Metric = metric::MetricModel<f64>;
pub type State = metric::RadialState<f64>;
pub type Options = metric::BuildOptions<f64>;
pub type Series = integrals::BallIntegralSeries<f64>;
pub type Fit = integrals::GrowthFit<f64>;

/// Single-precision aliases.
pub type Profile32 = profile::GeneratorProfile<f32>;
pub type Metric32 = metric::MetricModel<f32>;
