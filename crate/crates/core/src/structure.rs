//! The learnable similarity model.
//!
//! Node `i` is mapped to `z_i = M (a ∘ x_i)`; the learned graph is the
//! Gaussian kernel `Ã_ij = exp(-‖z_i - z_j‖² / (2τ²))` with a zero diagonal,
//! blended with the observed adjacency as `Â = (1-α) A + α Ã`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Projection `M` (p×d), feature selector `a` (d), kernel width `τ`, blend
/// weight `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureParams {
    pub projection: Array2<f64>,
    pub selector: Array1<f64>,
    pub tau: f64,
    pub alpha: f64,
}

impl StructureParams {
    /// `M = [I_p | 0]`, `a = 1`.
    pub fn identity_init(d: usize, p: usize, tau: f64, alpha: f64) -> Result<Self> {
        let params = StructureParams {
            projection: Array2::from_shape_fn((p, d), |(r, c)| if r == c { 1.0 } else { 0.0 }),
            selector: Array1::ones(d),
            tau,
            alpha,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn d(&self) -> usize {
        self.selector.len()
    }

    pub fn p(&self) -> usize {
        self.projection.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (p, d) = self.projection.dim();
        if d != self.selector.len() {
            return Err(Error::validation(format!(
                "projection is {p}x{d} but selector has length {}",
                self.selector.len()
            )));
        }
        if p == 0 || p > d {
            return Err(Error::validation(format!(
                "projection dimension p={p} must satisfy 1 <= p <= d={d}"
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::validation(format!("tau must be positive, got {}", self.tau)));
        }
        check_alpha(self.alpha)
    }

    /// Number of nonzero entries of the selector.
    pub fn selector_nonzeros(&self) -> usize {
        self.selector.iter().filter(|v| **v != 0.0).count()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::validation(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Learned similarity `Ã` and its degree vector `diag(D̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedGraph {
    pub similarity: Array2<f64>,
    pub degrees: Array1<f64>,
}

/// Rows `M (a ∘ x_i)`, i.e. `(X diag(a)) Mᵀ`.
pub fn transform_features(params: &StructureParams, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != params.d() || params.projection.ncols() != params.d() {
        return Err(Error::validation(format!(
            "features have {} columns, structure model expects {}",
            x.ncols(),
            params.d()
        )));
    }
    let scaled = x * &params.selector.view().insert_axis(Axis(0));
    Ok(scaled.dot(&params.projection.t()))
}

/// Squared Euclidean distances between rows via `H + K - 2G` with
/// `G = Z Zᵀ`, `H_ij = G_ii`, `K_ij = G_jj`. Round-off negatives clamp to 0.
pub fn pairwise_sq_distances(z: &ArrayView2<f64>) -> Array2<f64> {
    let gram = z.dot(&z.t());
    let n = gram.nrows();
    let norms = gram.diag().to_owned();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (norms[i] + norms[j] - 2.0 * gram[[i, j]]).max(0.0);
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}

fn kernel_from_distances(dist: &Array2<f64>, tau: f64) -> Array2<f64> {
    let scale = 1.0 / (2.0 * tau * tau);
    let mut s = dist.mapv(|v| (-v * scale).exp());
    s.diag_mut().fill(0.0);
    s
}

/// `Ã` and `D̃` for the current parameters.
pub fn similarity_matrix(params: &StructureParams, x: &ArrayView2<f64>) -> Result<LearnedGraph> {
    params.validate()?;
    let z = transform_features(params, x)?;
    let similarity = kernel_from_distances(&pairwise_sq_distances(&z.view()), params.tau);
    let degrees = similarity.sum_axis(Axis(1));
    Ok(LearnedGraph { similarity, degrees })
}

/// `(1-α) A + α Ã`.
pub fn blend_adjacency(a: &ArrayView2<f64>, learned: &ArrayView2<f64>, alpha: f64) -> Result<Array2<f64>> {
    check_alpha(alpha)?;
    if a.dim() != learned.dim() {
        return Err(Error::validation(format!(
            "cannot blend {:?} with {:?}",
            a.dim(),
            learned.dim()
        )));
    }
    Ok(a.mapv(|v| (1.0 - alpha) * v) + learned.mapv(|v| alpha * v))
}

/// Soft-thresholding: `sgn(v) · max(|v| - t, 0)` element-wise.
pub fn prox_l1(v: &ArrayView1<f64>, threshold: f64) -> Result<Array1<f64>> {
    if !(threshold >= 0.0) {
        return Err(Error::validation(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    Ok(v.mapv(|x| x.signum() * (x.abs() - threshold).max(0.0)))
}

/// Gradients of `L = Σ_{i≠j} U_ij Ã_ij` with respect to `M` and `a`, where
/// `U` is the upstream `dL/dÃ`. The diagonal of `U` is ignored since `Ã_ii`
/// is pinned to 0.
///
/// With `E_ij = -U_ij Ã_ij / (2τ²)` (the gradient w.r.t. the squared
/// distance) and `S = E + Eᵀ`, the gradient w.r.t. the transformed rows is
/// `dZ = 2 (diag(S 1) - S) Z`; then `dM = dZᵀ (X diag a)` and
/// `da_k = Σ_i (dZ M)_ik X_ik`.
pub fn kernel_gradients(
    params: &StructureParams,
    x: &ArrayView2<f64>,
    upstream: &ArrayView2<f64>,
) -> Result<(Array2<f64>, Array1<f64>)> {
    params.validate()?;
    let n = x.nrows();
    if upstream.dim() != (n, n) {
        return Err(Error::validation(format!(
            "upstream gradient is {:?}, expected ({n}, {n})",
            upstream.dim()
        )));
    }
    let z = transform_features(params, x)?;
    let similarity = kernel_from_distances(&pairwise_sq_distances(&z.view()), params.tau);
    let scale = -1.0 / (2.0 * params.tau * params.tau);

    let mut s = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let e_ij = upstream[[i, j]] * similarity[[i, j]] * scale;
                s[[i, j]] += e_ij;
                s[[j, i]] += e_ij;
            }
        }
    }
    let mut laplacian = -s;
    for i in 0..n {
        let row: f64 = -laplacian.row(i).sum();
        laplacian[[i, i]] += row;
    }
    let dz = laplacian.dot(&z) * 2.0;

    let scaled = x * &params.selector.view().insert_axis(Axis(0));
    let d_projection = dz.t().dot(&scaled);
    let d_scaled = dz.dot(&params.projection);
    let d_selector = (&d_scaled * x).sum_axis(Axis(0));
    Ok((d_projection, d_selector))
}
