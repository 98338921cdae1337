//! Structure-poisoning attacks used as stand-ins for a gradient-based
//! attacker. The budget is `floor(rate * |E|)` node pairs, with `|E|` the
//! edge count of the clean graph.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_binary_symmetric, count_edges, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Toggle uniformly chosen node pairs.
    RandomFlip,
    /// Connect the most dissimilar unconnected pairs.
    FeatureDifference,
}

impl AttackKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::RandomFlip => "random_flip",
            AttackKind::FeatureDifference => "feature_difference",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_flip" => Ok(AttackKind::RandomFlip),
            "feature_difference" => Ok(AttackKind::FeatureDifference),
            other => Err(Error::validation(format!("unknown attack kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub rate: f64,
    pub seed: u64,
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.rate)
    }

    pub fn apply(&self, graph: &Graph) -> Result<Array2<f64>> {
        match self.kind {
            AttackKind::RandomFlip => random_flip_attack(&graph.adjacency.view(), self.rate, self.seed),
            AttackKind::FeatureDifference => feature_difference_attack(graph, self.rate, self.seed),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&rate) {
        return Err(Error::validation(format!(
            "attack rate must lie in [0, 0.5], got {rate}"
        )));
    }
    Ok(())
}

/// `floor(rate * |E|)`.
pub fn attack_budget(adjacency: &ArrayView2<f64>, rate: f64) -> usize {
    // tiny slack so 0.05 * 100 is 5 rather than 4.999...
    (rate * count_edges(adjacency) as f64 + 1e-9).floor() as usize
}

/// Index of pair `(i, j)`, `i < j`, in row-major upper-triangle order.
fn pair_from_index(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

/// Toggles `floor(rate * |E|)` distinct uniformly chosen node pairs.
pub fn random_flip_attack(adjacency: &ArrayView2<f64>, rate: f64, seed: u64) -> Result<Array2<f64>> {
    check_rate(rate)?;
    check_binary_symmetric(adjacency)?;
    let n = adjacency.nrows();
    let budget = attack_budget(adjacency, rate);
    let pairs = n * n.saturating_sub(1) / 2;
    if budget > pairs {
        return Err(Error::validation(format!(
            "budget {budget} exceeds the {pairs} available node pairs"
        )));
    }
    let mut out = adjacency.to_owned();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, pairs, budget).into_vec();
    chosen.sort_unstable();
    for k in chosen {
        let (i, j) = pair_from_index(k, n);
        let v = 1.0 - out[[i, j]];
        out[[i, j]] = v;
        out[[j, i]] = v;
    }
    Ok(out)
}

/// Adds `floor(rate * |E|)` edges between currently unconnected pairs with
/// the largest feature distance; ties go to the lexicographically smaller
/// pair. Deterministic, so `seed` does not influence the result.
pub fn feature_difference_attack(graph: &Graph, rate: f64, _seed: u64) -> Result<Array2<f64>> {
    check_rate(rate)?;
    let a = &graph.adjacency;
    check_binary_symmetric(&a.view())?;
    let n = graph.n();
    let budget = attack_budget(&a.view(), rate);
    let x = &graph.features;

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if a[[i, j]] == 0.0 {
                let d: f64 = x.row(i).iter().zip(x.row(j)).map(|(p, q)| (p - q).powi(2)).sum();
                candidates.push((d, i, j));
            }
        }
    }
    if budget > candidates.len() {
        return Err(Error::validation(format!(
            "budget {budget} exceeds the {} unconnected pairs",
            candidates.len()
        )));
    }
    // squared distance orders the same as distance
    candidates.sort_by(|p, q| q.0.total_cmp(&p.0).then((p.1, p.2).cmp(&(q.1, q.2))));
    let mut out = a.clone();
    for &(_, i, j) in candidates.iter().take(budget) {
        out[[i, j]] = 1.0;
        out[[j, i]] = 1.0;
    }
    Ok(out)
}

/// Number of node pairs `i < j` where two adjacency matrices differ.
pub fn pair_differences(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> usize {
    let n = a.nrows();
    let mut diff = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if a[[i, j]] != b[[i, j]] {
                diff += 1;
            }
        }
    }
    diff
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{homophily_ratios, sbm_generate, SbmSpec};
    use ndarray::array;

    fn graph_with(features: Array2<f64>, adjacency: Array2<f64>, labels: Vec<usize>, c: usize) -> Graph {
        let n = labels.len();
        let mut train = vec![false; n];
        train[0] = true;
        Graph::new(features, adjacency, labels, c, train, vec![false; n]).unwrap()
    }

    #[test]
    fn pair_indexing_covers_upper_triangle() {
        let n = 5;
        let all: Vec<_> = (0..10).map(|k| pair_from_index(k, n)).collect();
        let mut expect = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                expect.push((i, j));
            }
        }
        assert_eq!(all, expect);
    }

    #[test]
    fn zero_rate_is_identity() {
        let g = sbm_generate(&SbmSpec::axis_separated(vec![5, 5], 0.5, 0.1, 2, 1.0, 0.2, 3)).unwrap();
        assert_eq!(random_flip_attack(&g.adjacency.view(), 0.0, 1).unwrap(), g.adjacency);
        assert_eq!(feature_difference_attack(&g, 0.0, 1).unwrap(), g.adjacency);
    }

    #[test]
    fn two_node_single_flip_removes_edge() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let out = random_flip_attack(&a.view(), 0.5, 0).unwrap();
        // budget floor(0.5 * 1) = 0
        assert_eq!(out, a);
        let mut a4 = Array2::zeros((4, 4));
        a4[[0, 1]] = 1.0;
        a4[[1, 0]] = 1.0;
        a4[[2, 3]] = 1.0;
        a4[[3, 2]] = 1.0;
        let out = random_flip_attack(&a4.view(), 0.5, 9).unwrap();
        assert_eq!(pair_differences(&a4.view(), &out.view()), 1);
    }

    #[test]
    fn random_flip_differs_by_budget() {
        for seed in 0..10 {
            let g = sbm_generate(&SbmSpec::axis_separated(vec![8, 8], 0.5, 0.1, 2, 1.0, 0.2, seed)).unwrap();
            for rate in [0.05, 0.1, 0.25, 0.5] {
                let out = random_flip_attack(&g.adjacency.view(), rate, seed).unwrap();
                let budget = (rate * g.num_edges() as f64 + 1e-9).floor() as usize;
                assert_eq!(pair_differences(&g.adjacency.view(), &out.view()), budget);
                check_binary_symmetric(&out.view()).unwrap();
                assert_eq!(out, random_flip_attack(&g.adjacency.view(), rate, seed).unwrap());
            }
        }
    }

    #[test]
    fn feature_difference_needs_free_pairs() {
        let mut a = Array2::ones((4, 4));
        a.diag_mut().fill(0.0);
        let g = graph_with(Array2::zeros((4, 1)), a.clone(), vec![0; 4], 1);
        assert!(feature_difference_attack(&g, 0.5, 0).is_err());
        // flipping on a complete graph can only delete
        let out = random_flip_attack(&a.view(), 0.5, 0).unwrap();
        assert_eq!(count_edges(&out.view()), 3);
    }

    #[test]
    fn feature_difference_picks_farthest_pair() {
        let x = array![[0.0], [1.0], [2.0], [10.0]];
        let mut a = Array2::zeros((4, 4));
        // two edges so that rate 0.5 gives budget 1; both far from node 3
        a[[0, 1]] = 1.0;
        a[[1, 0]] = 1.0;
        a[[1, 2]] = 1.0;
        a[[2, 1]] = 1.0;
        let g = graph_with(x, a.clone(), vec![0, 0, 1, 1], 2);
        let out = feature_difference_attack(&g, 0.5, 0).unwrap();
        assert_eq!(out[[0, 3]], 1.0);
        assert_eq!(pair_differences(&a.view(), &out.view()), 1);
    }

    #[test]
    fn feature_difference_ties_are_lexicographic() {
        let x = array![[0.0], [0.0], [1.0], [1.0]];
        let mut a = Array2::zeros((4, 4));
        a[[0, 1]] = 1.0;
        a[[1, 0]] = 1.0;
        a[[2, 3]] = 1.0;
        a[[3, 2]] = 1.0;
        let g = graph_with(x, a, vec![0, 0, 1, 1], 2);
        let out = feature_difference_attack(&g, 0.5, 0).unwrap();
        assert_eq!(out[[0, 2]], 1.0);
        assert_eq!(out[[0, 3]], 0.0);
    }

    #[test]
    fn feature_difference_lowers_homophily_on_separated_blocks() {
        let g = sbm_generate(&SbmSpec::axis_separated(vec![15, 15], 0.4, 0.02, 4, 3.0, 0.3, 12)).unwrap();
        let out = feature_difference_attack(&g, 0.25, 0).unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                if out[[i, j]] != g.adjacency[[i, j]] {
                    assert_ne!(g.labels[i], g.labels[j]);
                }
            }
        }
        let mean = |w: &Array2<f64>| homophily_ratios(&g, &w.view()).unwrap().iter().sum::<f64>() / g.n() as f64;
        assert!(mean(&out) < mean(&g.adjacency));
    }

    #[test]
    fn rejects_bad_rate() {
        let a = Array2::zeros((3, 3));
        assert!(random_flip_attack(&a.view(), 0.6, 0).is_err());
        assert!(random_flip_attack(&a.view(), -0.1, 0).is_err());
        assert!("metattack".parse::<AttackKind>().is_err());
    }
}
