use ndarray::ArrayView2;

use super::Graph;
use crate::error::{Error, Result};

/// Per-node fraction of neighbors sharing the node's label. Neighbors of `j`
/// are the `i != j` with `w[j, i] > 0`; an isolated node gets 0.
pub fn homophily_ratios(graph: &Graph, w: &ArrayView2<f64>) -> Result<Vec<f64>> {
    let n = graph.n();
    if w.dim() != (n, n) {
        return Err(Error::validation(format!(
            "adjacency is {:?}, graph has {n} nodes",
            w.dim()
        )));
    }
    let ratios = (0..n)
        .map(|j| {
            let (mut same, mut total) = (0usize, 0usize);
            for i in (0..n).filter(|&i| i != j && w[[j, i]] > 0.0) {
                total += 1;
                if graph.labels[i] == graph.labels[j] {
                    same += 1;
                }
            }
            if total == 0 {
                0.0
            } else {
                same as f64 / total as f64
            }
        })
        .collect();
    Ok(ratios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn graph(adj: Array2<f64>, labels: Vec<usize>, c: usize) -> Graph {
        let n = labels.len();
        let mut train = vec![false; n];
        train[0] = true;
        Graph::new(Array2::zeros((n, 1)), adj, labels, c, train, vec![false; n]).unwrap()
    }

    #[test]
    fn path_graph() {
        let a = array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let g = graph(a.clone(), vec![0, 0, 1], 2);
        assert_eq!(homophily_ratios(&g, &a.view()).unwrap(), vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn complete_graph_single_label() {
        let mut a = Array2::ones((4, 4));
        a.diag_mut().fill(0.0);
        let g = graph(a.clone(), vec![0; 4], 1);
        assert_eq!(homophily_ratios(&g, &a.view()).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn isolated_nodes_are_zero() {
        let a = Array2::zeros((3, 3));
        let g = graph(a.clone(), vec![0, 0, 1], 2);
        assert_eq!(homophily_ratios(&g, &a.view()).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn weighted_input_and_diagonal_ignored() {
        let a = array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let g = graph(a, vec![0, 0, 1], 2);
        let w = array![[0.9, 0.2, 0.0], [0.2, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert_eq!(homophily_ratios(&g, &w.view()).unwrap(), vec![1.0, 1.0, 0.0]);
    }

    proptest::proptest! {
        #[test]
        fn ratios_in_unit_interval(seed in 0u64..2000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 7;
            let mut a = Array2::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_bool(0.3) {
                        a[[i, j]] = 1.0;
                        a[[j, i]] = 1.0;
                    }
                }
            }
            let labels = (0..n).map(|_| rng.random_range(0..3)).collect();
            let g = graph(a.clone(), labels, 3);
            for r in homophily_ratios(&g, &a.view()).unwrap() {
                proptest::prop_assert!((0.0..=1.0).contains(&r));
            }
        }
    }
}
