use ndarray::{Array1, Array2, ArrayView2};

use super::{check_symmetric, row_sums};
use crate::error::{Error, Result};

/// `D^{-1/2} (A + I) D^{-1/2}` with `D = diag(rowsum(A + I))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: Array2<f64>,
}

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.matrix
    }

    /// Wraps an arbitrary matrix as the propagation operator. The caller is
    /// responsible for it being meaningful; used by gradient checks that
    /// perturb single entries.
    pub fn from_raw(matrix: Array2<f64>) -> Self {
        NormalizedAdjacency { matrix }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Symmetric GCN normalization with self-loops. Works on weighted input
/// (the blended adjacency) as long as it is symmetric and nonnegative.
pub fn normalize_adjacency(a: &ArrayView2<f64>) -> Result<NormalizedAdjacency> {
    check_symmetric(a, "adjacency", 1e-12)?;
    if let Some(v) = a.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::validation(format!(
            "adjacency entries must be finite and nonnegative, found {v}"
        )));
    }
    let scale = inv_sqrt_degrees(a);
    let n = a.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let b = a[[i, j]] + if i == j { 1.0 } else { 0.0 };
            out[[i, j]] = scale[i] * b * scale[j];
        }
    }
    Ok(NormalizedAdjacency { matrix: out })
}

fn inv_sqrt_degrees(a: &ArrayView2<f64>) -> Array1<f64> {
    (row_sums(a) + 1.0).mapv(|d| 1.0 / d.sqrt())
}

/// Pulls a gradient with respect to the normalized matrix back to the raw
/// (weighted) adjacency, treating every entry of `a` as independent.
///
/// With `B = A + I`, `s = rowsum(B)^{-1/2}` and `N_ij = s_i B_ij s_j`:
/// `dL/dA_ab = G_ab s_a s_b - (1/2) s_a^3 * sum_j (G_aj B_aj s_j + G_ja B_ja s_j)`.
pub fn normalize_adjacency_backward(a: &ArrayView2<f64>, upstream: &ArrayView2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let s = inv_sqrt_degrees(a);
    let b = |i: usize, j: usize| a[[i, j]] + if i == j { 1.0 } else { 0.0 };

    let mut ds = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += upstream[[i, j]] * b(i, j) * s[j] + upstream[[j, i]] * b(j, i) * s[j];
        }
        ds[i] = acc;
    }

    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        // ds_i/dd_i = -1/2 d_i^{-3/2} = -1/2 s_i^3
        let through_degree = -0.5 * s[i].powi(3) * ds[i];
        for j in 0..n {
            out[[i, j]] = upstream[[i, j]] * s[i] * s[j] + through_degree;
        }
    }
    out
}
