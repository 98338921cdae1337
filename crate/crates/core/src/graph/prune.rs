use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::check_square;
use crate::error::{Error, Result};

/// Post-training sparsification applied to the learned adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrunePolicy {
    #[default]
    None,
    Knn {
        k: usize,
    },
    Epsilon {
        epsilon: f64,
    },
}

impl PrunePolicy {
    pub fn apply(&self, w: &ArrayView2<f64>) -> Result<Array2<f64>> {
        match *self {
            PrunePolicy::None => Ok(w.to_owned()),
            PrunePolicy::Knn { k } => prune_knn(w, k),
            PrunePolicy::Epsilon { epsilon } => prune_epsilon(w, epsilon),
        }
    }
}

fn check_nonnegative(w: &ArrayView2<f64>) -> Result<usize> {
    let n = check_square(w, "weight matrix")?;
    if let Some(v) = w.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::validation(format!(
            "weight matrix must be nonnegative, found {v}"
        )));
    }
    Ok(n)
}

/// Keeps, per row, the `k` largest off-diagonal weights (ties go to the
/// lower column index), then symmetrizes with an element-wise max, i.e. the
/// union of the directed kNN edges. The diagonal is always zeroed.
pub fn prune_knn(w: &ArrayView2<f64>, k: usize) -> Result<Array2<f64>> {
    if k == 0 {
        return Err(Error::validation("k must be positive"));
    }
    let n = check_nonnegative(w)?;
    if k >= n {
        let mut out = w.to_owned();
        out.diag_mut().fill(0.0);
        return Ok(out);
    }
    let mut kept = Array2::<f64>::zeros((n, n));
    let mut cols: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        cols.clear();
        cols.extend((0..n).filter(|&j| j != i));
        // stable sort keeps lower column index first among equal weights
        cols.sort_by(|&x, &y| w[[i, y]].total_cmp(&w[[i, x]]));
        for &j in cols.iter().take(k) {
            kept[[i, j]] = w[[i, j]];
        }
    }
    let mut out = kept.clone();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = kept[[i, j]].max(kept[[j, i]]);
        }
    }
    Ok(out)
}

/// Zeroes every weight strictly below `epsilon`; weights equal to `epsilon`
/// survive.
pub fn prune_epsilon(w: &ArrayView2<f64>, epsilon: f64) -> Result<Array2<f64>> {
    if !(epsilon >= 0.0) {
        return Err(Error::validation(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    check_nonnegative(w)?;
    Ok(w.mapv(|v| if v < epsilon { 0.0 } else { v }))
}
