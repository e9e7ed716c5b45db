//! Versioned JSON snapshot of a built metric.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::finite_difference::derivative;
use crate::scalar::Real;

use super::{ClassificationResult, MetricClass, MetricModel, Repr, VolumeGrowth};

/// A real that survives JSON: non-finite values are written as strings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JsonReal(pub f64);

impl Serialize for JsonReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for JsonReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = JsonReal;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E>(self, v: f64) -> std::result::Result<JsonReal, E> {
                Ok(JsonReal(v))
            }
            fn visit_i64<E>(self, v: i64) -> std::result::Result<JsonReal, E> {
                Ok(JsonReal(v as f64))
            }
            fn visit_u64<E>(self, v: u64) -> std::result::Result<JsonReal, E> {
                Ok(JsonReal(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<JsonReal, E> {
                match v {
                    "inf" => Ok(JsonReal(f64::INFINITY)),
                    "-inf" => Ok(JsonReal(f64::NEG_INFINITY)),
                    "nan" => Ok(JsonReal(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSnapshot {
    pub class: MetricClass,
    pub xi_infinity: JsonReal,
    pub x0: JsonReal,
    pub r0: JsonReal,
    pub volume_growth: VolumeGrowth,
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub schema: u32,
    pub n: usize,
    pub repr: Repr,
    pub classification: ClassificationSnapshot,
    pub grid_r: Vec<JsonReal>,
    pub grid_x: Vec<JsonReal>,
    pub h: Vec<JsonReal>,
    pub f: Vec<JsonReal>,
    pub xi: Vec<JsonReal>,
    pub fprime: Vec<JsonReal>,
    pub s: Vec<JsonReal>,
    pub v: Vec<JsonReal>,
}

pub const SCHEMA: u32 = 1;

impl<T: Real> From<&ClassificationResult<T>> for ClassificationSnapshot {
    fn from(c: &ClassificationResult<T>) -> Self {
        Self {
            class: c.class,
            xi_infinity: JsonReal(c.xi_infinity.as_f64()),
            x0: JsonReal(c.x0.as_f64()),
            r0: JsonReal(c.r0.as_f64()),
            volume_growth: c.volume_growth,
            ambiguous: c.ambiguous,
        }
    }
}

fn col<T: Real>(v: impl Iterator<Item = T>) -> Vec<JsonReal> {
    v.map(|x| JsonReal(x.as_f64())).collect()
}

impl<T: Real> MetricModel<T> {
    pub fn snapshot(&self) -> MetricSnapshot {
        let st = self.grid_states();
        let c = self.classification();
        MetricSnapshot {
            schema: SCHEMA,
            n: self.n(),
            repr: self.repr(),
            classification: ClassificationSnapshot::from(c),
            grid_r: col(st.iter().map(|s| s.r)),
            grid_x: col(st.iter().map(|s| s.x)),
            h: col(st.iter().map(|s| s.h)),
            f: col(st.iter().map(|s| s.f)),
            xi: col(st.iter().map(|s| s.xi)),
            fprime: col(st.iter().map(|s| s.fprime)),
            s: col(st.iter().map(|s| s.s)),
            v: col(st.iter().map(|s| s.v)),
        }
    }
}

fn raw(v: &[JsonReal]) -> Vec<f64> {
    v.iter().map(|x| x.0).collect()
}

impl MetricSnapshot {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(text)?;
        if snap.schema != SCHEMA {
            return Err(Error::InvalidArgument(format!(
                "unsupported snapshot schema {}",
                snap.schema
            )));
        }
        Ok(snap)
    }

    /// `(r, A, B, C)` from the tables alone, with second-order finite
    /// differences in `ln r` (points with `r > 0`).
    pub fn curvature_from_tables(&self) -> Vec<(f64, f64, f64, f64)> {
        let r = raw(&self.grid_r);
        let keep: Vec<usize> = (0..r.len()).filter(|&i| r[i] > 0.0).collect();
        if keep.len() < 3 {
            return Vec::new();
        }
        let pick = |v: &[JsonReal]| keep.iter().map(|&i| v[i].0).collect::<Vec<f64>>();
        let (r, h, f, xi) = (pick(&self.grid_r), pick(&self.h), pick(&self.f), pick(&self.xi));
        let u: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        let dxi = derivative(&u, &xi, 3);
        let dh = derivative(&u, &h, 3);
        let df = derivative(&u, &f, 3);
        (0..r.len())
            .map(|i| {
                let (ri, hi, fi) = (r[i], h[i], f[i]);
                let (xi_r, h_r, f_r) = (dxi[i] / ri, dh[i] / ri, df[i] / ri);
                let a = xi_r / hi;
                let b = f_r / (fi * fi) - h_r / (hi * fi);
                let c = -2.0 * f_r / (fi * fi);
                (ri, a, b, c)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_metric, BuildOptions};
    use crate::profile::{GeneratorProfile, ProfileKind};

    #[test]
    fn json_round_trip_keeps_infinities() {
        let p = GeneratorProfile::<f64>::parse(ProfileKind::Xi, "0.5*t/(1+t)").unwrap();
        let m = build_metric(&p, 2, &BuildOptions::default().with_grid(256)).unwrap();
        let snap = m.snapshot();
        let text = snap.to_json().unwrap();
        assert!(text.contains("\"schema\": 1"));
        assert!(text.contains("\"x0\": \"inf\""));
        let back = MetricSnapshot::from_json(&text).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn rejects_other_schema() {
        let p = GeneratorProfile::<f64>::parse(ProfileKind::Xi, "0").unwrap();
        let m = build_metric(&p, 2, &BuildOptions::default().with_grid(64)).unwrap();
        let text = m.snapshot().to_json().unwrap().replace("\"schema\": 1", "\"schema\": 7");
        assert!(MetricSnapshot::from_json(&text).is_err());
    }
}
