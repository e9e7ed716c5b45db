//! Curvature components A, B, C of a U(n)-invariant metric and the Ricci
//! quantities derived from them.
//!
//! `A` is the radial holomorphic sectional curvature, `B` the mixed
//! radial-transverse bisectional curvature and `C` the transverse one.
//! The Ricci form has eigenvalue `λ` once (radial) and `μ` with multiplicity
//! `n - 1`; as a real symmetric form these double to `{λ, λ, μ × (2n-2)}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{MetricModel, RadialState};
use crate::scalar::{binomial, Algebra, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Abc<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

/// `(A, B, C)` from a radial state via the r-form
/// `A = ξ'/h`, `B = f'/f² - h'/(hf)`, `C = -2f'/f²`.
///
/// `f'` and `h'` are rewritten exactly as `f' = -D/r²` and `h' = -ξh/r` with
/// `D = v - x²`, which keeps B and C accurate where they are small.
pub fn abc_r_form<T: Real>(st: &RadialState<T>) -> Abc<T> {
    let v2 = st.v * st.v;
    Abc {
        a: st.dxi / st.h,
        b: (st.xi * st.v - st.d) / v2,
        c: T::lit(2.0) * st.d / v2,
    }
}

/// `(A, B, C)` via the F-form
/// `A = F'F''/(2x(1+F'²)²)`, `B = x²/v² - 1/(v√(1+F'²))`, `C = 2/v - 2x²/v²`.
///
/// B and C are regrouped around `D = v - x²` as in [`abc_r_form`].
pub fn abc_x_form<T: Real>(st: &RadialState<T>) -> Abc<T> {
    let fp = st.fprime;
    let g2 = T::one() + fp * fp;
    let g = g2.sqrt();
    let v2 = st.v * st.v;
    let x2 = st.x * st.x;
    Abc {
        a: fp * st.fpp / (T::lit(2.0) * st.x * g2 * g2),
        b: (x2 * fp * fp / (g + T::one()) - st.d) / (v2 * g),
        c: T::lit(2.0) * st.d / v2,
    }
}

/// Curvature at radius `r > 0`.
pub fn abc_at_r<T: Real>(m: &MetricModel<T>, r: T) -> Result<Abc<T>> {
    if !(r > T::zero()) {
        return Err(Error::out_of_range("r", r.as_f64(), 0.0, m.r_end().as_f64()));
    }
    Ok(abc_r_form(&m.state_at_r(r)?))
}

/// Curvature at `0 < x < x₀`.
pub fn abc_at_x<T: Real>(m: &MetricModel<T>, x: T) -> Result<Abc<T>> {
    let x0 = m.classification().x0.min(m.x_end());
    let open_end = m.classification().x0.is_finite();
    if !(x > T::zero()) || x > x0 || (open_end && x >= x0) {
        return Err(Error::out_of_range("x", x.as_f64(), 0.0, x0.as_f64()));
    }
    let st = m.state_at_x(x)?;
    if st.fprime.is_infinite() {
        return Err(Error::out_of_range("x", x.as_f64(), 0.0, x0.as_f64()));
    }
    Ok(abc_x_form(&st))
}

/// `λ = A + (n-1)B`, `μ = B + (n/2)C`.
pub fn ricci_eigenvalues<T: Algebra>(a: T, b: T, c: T, n: usize) -> (T, T) {
    let n1 = T::from_count(n as u64 - 1);
    let lambda = a + n1 * b.clone();
    let mu = b + T::from_count(n as u64) * c / T::from_count(2);
    (lambda, mu)
}

/// `R = A + 2(n-1)B + n(n-1)C/2`.
pub fn scalar_curvature<T: Algebra>(a: T, b: T, c: T, n: usize) -> T {
    let n = n as u64;
    a + T::from_count(2 * (n - 1)) * b + T::from_count(n * (n - 1)) * c / T::from_count(2)
}

/// Elementary symmetric function `e_k` of `{λ, λ, μ × (2n-2)}`.
pub fn sigma_k<T: Algebra>(lambda: T, mu: T, n: usize, k: usize) -> Result<T> {
    if n < 1 || k < 1 || k > 2 * n {
        return Err(Error::out_of_range("k", k as f64, 1.0, (2 * n) as f64));
    }
    let m = 2 * n - 2;
    let mut acc = T::zero();
    for j in 0..=k.min(2) {
        let rest = k - j;
        if rest > m {
            continue;
        }
        let coeff = binomial(2, j) * binomial(m, rest);
        acc = acc + T::from_count(coeff) * lambda.powi(j) * mu.powi(k - j);
    }
    Ok(acc)
}

/// `Ric^k ∧ ω^{n-k} / ωⁿ = [C(n-1,k-1) λ μ^{k-1} + C(n-1,k) μ^k] / C(n,k)`.
pub fn chern_density_k<T: Algebra>(lambda: T, mu: T, n: usize, k: usize) -> Result<T> {
    if n < 1 || k < 1 || k > n {
        return Err(Error::out_of_range("k", k as f64, 1.0, n as f64));
    }
    let mixed = T::from_count(binomial(n - 1, k - 1)) * lambda * mu.powi(k - 1);
    let pure = T::from_count(binomial(n - 1, k)) * mu.powi(k);
    Ok((mixed + pure) / T::from_count(binomial(n, k)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureSample<T> {
    pub r: T,
    pub x: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub lambda: T,
    pub mu: T,
    pub scalar: T,
}

impl<T: Real> CurvatureSample<T> {
    pub fn from_state(st: &RadialState<T>, n: usize) -> Self {
        let abc = abc_r_form(st);
        let (lambda, mu) = ricci_eigenvalues(abc.a, abc.b, abc.c, n);
        Self {
            r: st.r,
            x: st.x,
            a: abc.a,
            b: abc.b,
            c: abc.c,
            lambda,
            mu,
            scalar: scalar_curvature(abc.a, abc.b, abc.c, n),
        }
    }
}

/// Curvature at every grid point with `r > 0` and finite curvature.
pub fn curvature_table<T: Real>(m: &MetricModel<T>) -> Vec<CurvatureSample<T>> {
    m.grid_states()
        .par_iter()
        .filter(|st| st.r > T::zero())
        .map(|st| CurvatureSample::from_state(st, m.n()))
        .collect()
}

/// Write `r,x,A,B,C,lambda,mu,R` rows.
pub fn write_curvature_csv<T: Real, W: std::io::Write>(rows: &[CurvatureSample<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "x", "A", "B", "C", "lambda", "mu", "R"])?;
    for s in rows {
        w.write_record(
            [s.r, s.x, s.a, s.b, s.c, s.lambda, s.mu, s.scalar].map(|v| format!("{:?}", v.as_f64())),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Largest `|A|`, `|B|`, `|C|` over the grid.
pub fn curvature_sup<T: Real>(rows: &[CurvatureSample<T>]) -> Abc<T> {
    rows.iter().fold(
        Abc { a: T::zero(), b: T::zero(), c: T::zero() },
        |acc, s| Abc {
            a: acc.a.max(s.a.abs()),
            b: acc.b.max(s.b.abs()),
            c: acc.c.max(s.c.abs()),
        },
    )
}
