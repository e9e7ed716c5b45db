//! Finite-difference derivatives on nonuniform grids.

use crate::scalar::Real;

/// Fornberg weights for the first derivative at `z` using the stencil `xs`.
pub fn first_derivative_weights<T: Real>(z: T, xs: &[T]) -> Vec<T> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative order k (k = 0, 1)
    let mut c = vec![[T::zero(); 2]; n];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = xs[0] - z;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (T::from_usize_lossy(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - T::from_usize_lossy(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Derivative of tabulated `y(x)` at every node with a `width`-point stencil,
/// centred in the interior and shifted one-sided at the boundaries.
pub fn derivative<T: Real>(x: &[T], y: &[T], width: usize) -> Vec<T> {
    let n = x.len();
    assert!(n == y.len() && width >= 2 && n >= width);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let xs = &x[start..start + width];
            let w = first_derivative_weights(x[i], xs);
            w.iter().zip(&y[start..start + width]).map(|(&wi, &yi)| wi * yi).sum()
        })
        .collect()
}
