//! Graph regularizers: Laplacian smoothness of the features over the
//! learned similarity, and the spectral alignment term `‖Xᵀ Â‖₂`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::structure::pairwise_sq_distances;

/// Power-iteration defaults.
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// `tr(Xᵀ (D̃ - Ã) X)`, with `degrees = diag(D̃)`.
pub fn smoothness_loss(x: &ArrayView2<f64>, similarity: &ArrayView2<f64>, degrees: &ArrayView1<f64>) -> Result<f64> {
    let n = x.nrows();
    if similarity.dim() != (n, n) || degrees.len() != n {
        return Err(Error::validation(format!(
            "smoothness: X has {n} rows, similarity is {:?}, degrees has {}",
            similarity.dim(),
            degrees.len()
        )));
    }
    // tr(Xᵀ D X) - tr(Xᵀ Ã X)
    let weighted: f64 = (0..n).map(|i| degrees[i] * x.row(i).dot(&x.row(i))).sum();
    let coupled = (&x.t().dot(similarity) * &x.t()).sum();
    Ok(weighted - coupled)
}

/// `d/dÃ_ij` of `½ Σ ‖x_i - x_j‖² Ã_ij`: half the squared row distances.
pub fn smoothness_grad_wrt_similarity(x: &ArrayView2<f64>) -> Array2<f64> {
    pairwise_sq_distances(x) * 0.5
}

/// Top singular triple of a matrix from power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub sigma_max: f64,
    /// Left singular vector (length = rows).
    pub u: Array1<f64>,
    /// Right singular vector (length = cols).
    pub v: Array1<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// σ estimate after each iteration.
    pub history: Vec<f64>,
}

fn unit(len: usize) -> Array1<f64> {
    let mut e = Array1::zeros(len);
    if len > 0 {
        e[0] = 1.0;
    }
    e
}

/// Power iteration on `YᵀY` from a seeded Gaussian start. Stops when two
/// consecutive σ estimates differ by less than `tol`; on hitting
/// `max_iter` the best estimate comes back with `converged = false`.
pub fn spectral_norm(y: &ArrayView2<f64>, tol: f64, max_iter: usize, seed: u64) -> Result<SpectralPair> {
    if !(tol > 0.0) {
        return Err(Error::validation(format!("tol must be positive, got {tol}")));
    }
    let (rows, cols) = y.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::validation("spectral norm of an empty matrix"));
    }
    if y.iter().all(|v| *v == 0.0) {
        return Ok(SpectralPair {
            sigma_max: 0.0,
            u: unit(rows),
            v: unit(cols),
            iterations_used: 0,
            converged: true,
            history: Vec::new(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Array1<f64> = (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    v /= norm(&v.view());

    let mut history = Vec::new();
    let mut converged = false;
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let yv = y.dot(&v);
        let next_sigma = norm(&yv.view());
        history.push(next_sigma);
        let back = y.t().dot(&yv);
        let back_norm = norm(&back.view());
        if back_norm == 0.0 {
            // start vector in the null space; nothing to iterate on
            converged = true;
            break;
        }
        v = back / back_norm;
        let delta = (next_sigma - sigma).abs();
        sigma = next_sigma;
        if history.len() > 1 && delta < tol {
            converged = true;
            break;
        }
    }
    let yv = y.dot(&v);
    let last = norm(&yv.view());
    let u = if last > 0.0 { yv / last } else { unit(rows) };
    Ok(SpectralPair {
        sigma_max: last,
        u,
        v,
        iterations_used: history.len(),
        converged,
        history,
    })
}

/// Largest singular value of `Y - σ₁ u vᵀ`, i.e. an estimate of σ₂ used
/// to decide whether σ₁ is well separated.
pub fn second_singular_value(
    y: &ArrayView2<f64>,
    top: &SpectralPair,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let outer = top
        .u
        .view()
        .insert_axis(ndarray::Axis(1))
        .dot(&top.v.view().insert_axis(ndarray::Axis(0)));
    let deflated = y - &(outer * top.sigma_max);
    Ok(spectral_norm(&deflated.view(), tol, max_iter, seed.wrapping_add(1))?.sigma_max)
}

fn norm(v: &ArrayView1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Value and gradient of the alignment regularizer.
#[derive(Debug, Clone)]
pub struct AlignmentTerm {
    pub loss: f64,
    /// Symmetrized `dσ/dÂ`.
    pub grad: Array2<f64>,
    pub converged: bool,
}

/// `σ_max(Xᵀ Â)` and its (sub)gradient `X u vᵀ`, symmetrized as
/// `(G + Gᵀ)/2`. When the top singular value is repeated the power
/// iteration pair picks one element of the subdifferential.
pub fn alignment_loss_and_grad(
    x: &ArrayView2<f64>,
    adjacency: &ArrayView2<f64>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<AlignmentTerm> {
    let n = x.nrows();
    if adjacency.dim() != (n, n) {
        return Err(Error::validation(format!(
            "alignment: X has {n} rows, adjacency is {:?}",
            adjacency.dim()
        )));
    }
    let y = x.t().dot(adjacency);
    let pair = spectral_norm(&y.view(), tol, max_iter, seed)?;
    if pair.sigma_max == 0.0 {
        return Ok(AlignmentTerm {
            loss: 0.0,
            grad: Array2::zeros((n, n)),
            converged: pair.converged,
        });
    }
    let xu = x.dot(&pair.u);
    let g = xu
        .view()
        .insert_axis(ndarray::Axis(1))
        .dot(&pair.v.view().insert_axis(ndarray::Axis(0)));
    let grad = (&g + &g.t()) * 0.5;
    Ok(AlignmentTerm {
        loss: pair.sigma_max,
        grad,
        converged: pair.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn random_similarity(n: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array1<f64>) {
        let mut s = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.random::<f64>();
                s[[i, j]] = v;
                s[[j, i]] = v;
            }
        }
        let deg = s.sum_axis(ndarray::Axis(1));
        (s, deg)
    }

    #[test]
    fn smoothness_zero_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(5, 3, &mut rng);
        let z = Array2::zeros((5, 5));
        assert_eq!(
            smoothness_loss(&x.view(), &z.view(), &Array1::zeros(5).view()).unwrap(),
            0.0
        );

        let same = Array2::from_shape_fn((5, 3), |(_, k)| k as f64 + 0.5);
        let (s, deg) = random_similarity(5, &mut rng);
        assert_abs_diff_eq!(
            smoothness_loss(&same.view(), &s.view(), &deg.view()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn smoothness_trace_equals_pairwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(6, 3, &mut rng);
        let (s, deg) = random_similarity(6, &mut rng);
        let mut pairwise = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let d: f64 = (0..3).map(|k| (x[[i, k]] - x[[j, k]]).powi(2)).sum();
                pairwise += 0.5 * d * s[[i, j]];
            }
        }
        assert_abs_diff_eq!(
            smoothness_loss(&x.view(), &s.view(), &deg.view()).unwrap(),
            pairwise,
            epsilon = 1e-9
        );
    }

    #[test]
    fn smoothness_grad_cases() {
        assert_eq!(
            smoothness_grad_wrt_similarity(&Array2::ones((3, 2)).view()),
            Array2::zeros((3, 3))
        );
        let g = smoothness_grad_wrt_similarity(&array![[0.0, 0.0], [3.0, 4.0]].view());
        assert_abs_diff_eq!(g[[0, 1]], 12.5, epsilon = 1e-12);
        assert_eq!(g[[0, 0]], 0.0);
    }

    #[test]
    fn smoothness_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(5, 2, &mut rng);
        let (s, _) = random_similarity(5, &mut rng);
        let analytic = smoothness_grad_wrt_similarity(&x.view());
        let f = |s: &Array2<f64>| {
            let deg = s.sum_axis(ndarray::Axis(1));
            smoothness_loss(&x.view(), &s.view(), &deg.view()).unwrap()
        };
        let h = 1e-5;
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                // Ã stays symmetric, so perturb (i,j) and (j,i) together
                let mut p = s.clone();
                p[[i, j]] += h;
                p[[j, i]] += h;
                let mut m = s.clone();
                m[[i, j]] -= h;
                m[[j, i]] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                let expect = analytic[[i, j]] + analytic[[j, i]];
                let rel = (fd - expect).abs() / expect.abs().max(1e-12);
                assert!(rel < 1e-4, "({i},{j}) fd={fd} analytic={}", analytic[[i, j]]);
            }
        }
    }

    #[test]
    fn spectral_norm_diagonal_and_zero() {
        let y = array![[3.0, 0.0], [0.0, 2.0]];
        let pair = spectral_norm(&y.view(), 1e-12, 1000, 7).unwrap();
        assert!(pair.converged);
        assert_abs_diff_eq!(pair.sigma_max, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pair.v[0].abs(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(pair.v[1], 0.0, epsilon = 1e-6);

        let pair = spectral_norm(&Array2::zeros((3, 2)).view(), 1e-8, 10, 0).unwrap();
        assert_eq!(pair.sigma_max, 0.0);
        assert!(spectral_norm(&y.view(), 0.0, 10, 0).is_err());
    }

    #[test]
    fn spectral_norm_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = random(10, 7, &mut rng);
        let pair = spectral_norm(&y.view(), 1e-300, 3, 1).unwrap();
        assert!(!pair.converged);
        assert_eq!(pair.iterations_used, 3);
        assert!(pair.sigma_max > 0.0);
    }

    #[test]
    fn spectral_norm_unit_vectors_and_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = random(10, 7, &mut rng);
        let a = spectral_norm(&y.view(), 1e-12, 5000, 1).unwrap();
        let b = spectral_norm(&y.t(), 1e-12, 5000, 2).unwrap();
        assert_abs_diff_eq!(a.sigma_max, b.sigma_max, epsilon = 1e-8);
        assert_abs_diff_eq!(norm(&a.u.view()), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(norm(&a.v.view()), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn alignment_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random(4, 3, &mut rng);
        let t = alignment_loss_and_grad(&x.view(), &Array2::zeros((4, 4)).view(), 1e-10, 1000, 0).unwrap();
        assert_eq!(t.loss, 0.0);
        assert_eq!(t.grad, Array2::zeros((4, 4)));

        let mut a = random(4, 4, &mut rng);
        a = &a + &a.t();
        let t = alignment_loss_and_grad(&Array2::eye(4).view(), &a.view(), 1e-12, 5000, 0).unwrap();
        let direct = spectral_norm(&a.view(), 1e-12, 5000, 9).unwrap();
        assert_abs_diff_eq!(t.loss, direct.sigma_max, epsilon = 1e-8);
        assert_abs_diff_eq!(t.grad, t.grad.t(), epsilon = 1e-15);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn power_iteration_is_monotone(seed in 0u64..10_000, rows in 1usize..12, cols in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = random(rows, cols, &mut rng);
            let pair = spectral_norm(&y.view(), 1e-10, 2000, seed).unwrap();
            for w in pair.history.windows(2) {
                proptest::prop_assert!(w[1] >= w[0] * (1.0 - 1e-12) - 1e-14);
            }
        }
    }
}
