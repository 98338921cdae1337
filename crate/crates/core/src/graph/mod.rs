//! Graph instances and the structural operations applied to them.

mod homophily;
pub mod io;
mod normalize;
mod prune;
mod sbm;

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use homophily::homophily_ratios;
pub use normalize::{normalize_adjacency, normalize_adjacency_backward, NormalizedAdjacency};
pub use prune::{prune_epsilon, prune_knn, PrunePolicy};
pub use sbm::{sbm_generate, SbmSpec};

/// A node-classification problem: features, binary symmetric adjacency,
/// labels and a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub features: Array2<f64>,
    pub adjacency: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub train_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
}

impl Graph {
    /// Builds a graph and checks every invariant.
    pub fn new(
        features: Array2<f64>,
        adjacency: Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        train_mask: Vec<bool>,
        test_mask: Vec<bool>,
    ) -> Result<Self> {
        let g = Graph {
            features,
            adjacency,
            labels,
            num_classes,
            train_mask,
            test_mask,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// Number of labeled (training) nodes.
    pub fn num_train(&self) -> usize {
        self.train_mask.iter().filter(|&&b| b).count()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        count_edges(&self.adjacency.view())
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[[i, j]] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Same graph with a different adjacency matrix; the new matrix is
    /// validated.
    pub fn with_adjacency(&self, adjacency: Array2<f64>) -> Result<Self> {
        let mut g = self.clone();
        g.adjacency = adjacency;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::validation("graph has no nodes"));
        }
        if self.adjacency.dim() != (n, n) {
            return Err(Error::validation(format!(
                "adjacency is {:?}, expected ({n}, {n})",
                self.adjacency.dim()
            )));
        }
        check_binary_symmetric(&self.adjacency.view())?;
        if self.num_classes == 0 {
            return Err(Error::validation("num_classes must be positive"));
        }
        if self.labels.len() != n || self.train_mask.len() != n || self.test_mask.len() != n {
            return Err(Error::validation("labels and masks must have one entry per node"));
        }
        if let Some((i, &y)) = self.labels.iter().enumerate().find(|(_, &y)| y >= self.num_classes) {
            return Err(Error::validation(format!(
                "label {y} of node {i} is outside [0, {})",
                self.num_classes
            )));
        }
        if let Some(i) = (0..n).find(|&i| self.train_mask[i] && self.test_mask[i]) {
            return Err(Error::validation(format!("node {i} is in both train and test masks")));
        }
        if self.num_train() == 0 {
            return Err(Error::validation("train mask is empty"));
        }
        if let Some(v) = self.features.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite feature value {v}")));
        }
        Ok(())
    }
}

/// Stratified random split: in each class, `ceil(train_frac * size)` nodes
/// (at least one) go to train, the rest to test.
pub fn stratified_split(
    labels: &[usize],
    num_classes: usize,
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<bool>, Vec<bool>)> {
    if !(0.0..=1.0).contains(&train_frac) || train_frac == 0.0 {
        return Err(Error::validation(format!(
            "train fraction {train_frac} must lie in (0, 1]"
        )));
    }
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = vec![false; n];
    let mut test = vec![false; n];
    for c in 0..num_classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng);
        let k = ((train_frac * members.len() as f64).ceil() as usize).clamp(1, members.len());
        for (pos, &i) in members.iter().enumerate() {
            if pos < k {
                train[i] = true;
            } else {
                test[i] = true;
            }
        }
    }
    Ok((train, test))
}

pub(crate) fn count_edges(a: &ArrayView2<f64>) -> usize {
    let n = a.nrows();
    let mut e = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if a[[i, j]] != 0.0 {
                e += 1;
            }
        }
    }
    e
}

pub(crate) fn check_square(a: &ArrayView2<f64>, what: &str) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::validation(format!("{what} must be square, got {r}x{c}")));
    }
    Ok(r)
}

pub(crate) fn check_symmetric(a: &ArrayView2<f64>, what: &str, tol: f64) -> Result<()> {
    let n = check_square(a, what)?;
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (a[[i, j]], a[[j, i]]);
            if (x - y).abs() > tol * (1.0 + x.abs().max(y.abs())) {
                return Err(Error::validation(format!(
                    "{what} is not symmetric at ({i}, {j}): {x} vs {y}"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_binary_symmetric(a: &ArrayView2<f64>) -> Result<()> {
    let n = check_square(a, "adjacency")?;
    for i in 0..n {
        if a[[i, i]] != 0.0 {
            return Err(Error::validation(format!("adjacency has a self-loop at node {i}")));
        }
        for j in 0..n {
            let v = a[[i, j]];
            if v != 0.0 && v != 1.0 {
                return Err(Error::validation(format!(
                    "adjacency entry ({i}, {j}) = {v} is not binary"
                )));
            }
            if v != a[[j, i]] {
                return Err(Error::validation(format!("adjacency is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Row sums of a square matrix.
pub(crate) fn row_sums(a: &ArrayView2<f64>) -> Array1<f64> {
    a.sum_axis(ndarray::Axis(1))
}
