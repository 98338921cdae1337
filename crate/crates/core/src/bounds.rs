//! Rademacher-complexity diagnostics for two-layer GCNs: a lower bound for
//! graphs where every node has the same number of neighbors, and the
//! transductive Rademacher complexity (TRC) upper bound with the generalization
//! gap it implies.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute constants of the generalization gap, at their upper limits.
pub const C4: f64 = 5.05;
pub const C5: f64 = 0.8;

/// Norm constraints and graph sizes feeding the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Frobenius-norm bound on `W1`.
    pub r: f64,
    /// Spectral-norm bound on `W2`.
    pub d_norm: f64,
    /// Lipschitz constant of the activation (`l`, also `L_φ`).
    pub lipschitz: f64,
    /// Max feature row norm; computed from `X` when `None`.
    pub b: Option<f64>,
    /// Labeled node count.
    pub m: usize,
    /// Total node count.
    pub n: usize,
    /// Bias-norm bound.
    pub beta: f64,
    /// Weight ∞-norm bound.
    pub omega: f64,
    /// Number of layers.
    pub layers: usize,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("R", self.r),
            ("D", self.d_norm),
            ("lipschitz", self.lipschitz),
            ("beta", self.beta),
            ("omega", self.omega),
            ("B", self.b.unwrap_or(0.0)),
        ];
        for (name, v) in reals {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.m == 0 || self.m >= self.n {
            return Err(Error::validation(format!(
                "need 1 <= m < n, got m={} n={}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// `c1 = 2 L_φ β`
    pub fn c1(&self) -> f64 {
        2.0 * self.lipschitz * self.beta
    }

    /// `c2 = 2 L_φ ω`
    pub fn c2(&self) -> f64 {
        2.0 * self.lipschitz * self.omega
    }

    /// `c3 = L_φ ω sqrt(2/d)`
    pub fn c3(&self, d: usize) -> f64 {
        self.lipschitz * self.omega * (2.0 / d as f64).sqrt()
    }
}

/// The nodes over which the lower bound's minimum is taken, each with its
/// ordered neighbor list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub node: usize,
    pub neighbors: Vec<usize>,
}

fn neighbor_lists(adjacency: &ArrayView2<f64>) -> Vec<Vec<usize>> {
    let n = adjacency.nrows();
    (0..n)
        .map(|i| (0..n).filter(|&j| j != i && adjacency[[i, j]] != 0.0).collect())
        .collect()
}

/// Every node with its neighbors, in index order. Fails, naming the first
/// offending node, unless all degrees are equal and positive.
pub fn regular_neighborhoods(adjacency: &ArrayView2<f64>) -> Result<Vec<Neighborhood>> {
    let lists = neighbor_lists(adjacency);
    let hoods: Vec<Neighborhood> = lists
        .into_iter()
        .enumerate()
        .map(|(node, neighbors)| Neighborhood { node, neighbors })
        .collect();
    check_regular(&hoods)?;
    Ok(hoods)
}

/// Only the nodes whose degree is the most common positive degree (ties go
/// to the smaller degree).
pub fn modal_degree_neighborhoods(adjacency: &ArrayView2<f64>) -> Result<Vec<Neighborhood>> {
    let lists = neighbor_lists(adjacency);
    let mut counts = std::collections::BTreeMap::<usize, usize>::new();
    for l in lists.iter().filter(|l| !l.is_empty()) {
        *counts.entry(l.len()).or_default() += 1;
    }
    let (&q, _) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .ok_or_else(|| Error::validation("graph has no edges"))?;
    Ok(lists
        .into_iter()
        .enumerate()
        .filter(|(_, l)| l.len() == q)
        .map(|(node, neighbors)| Neighborhood { node, neighbors })
        .collect())
}

fn check_regular(hoods: &[Neighborhood]) -> Result<usize> {
    let first = hoods
        .first()
        .ok_or_else(|| Error::validation("no neighborhoods given"))?;
    let q = first.neighbors.len();
    if q == 0 {
        return Err(Error::validation(format!("node {} has no neighbors", first.node)));
    }
    if let Some(bad) = hoods.iter().find(|h| h.neighbors.len() != q) {
        return Err(Error::validation(format!(
            "graph is not {q}-regular: node {} has {} neighbors",
            bad.node,
            bad.neighbors.len()
        )));
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub q: usize,
    /// Node attaining the minimum.
    pub argmin_node: usize,
    /// `‖X̃_q Ā_{·k}‖₂ · Σ_t Ā_kt` at the minimizing node.
    pub min_term: f64,
    pub b: f64,
}

/// `(l² B D R / √m) · min_k ‖X̃_q Ā_{·k}‖₂ · Σ_{t∈N(k)} Ā_kt`.
///
/// For node `k` with neighbors `N(k)`, `X̃_q Ā_{·k}` is taken as
/// `Σ_{j∈N(k)} Ā_jk x_j`: the neighbor feature rows weighted by the
/// matching column entries of `Ā`.
pub fn rademacher_lower_bound(
    normalized: &ArrayView2<f64>,
    x: &ArrayView2<f64>,
    params: &BoundParams,
    neighborhoods: &[Neighborhood],
) -> Result<LowerBound> {
    params.validate()?;
    let n = x.nrows();
    if normalized.dim() != (n, n) {
        return Err(Error::validation(format!(
            "adjacency is {:?} but X has {n} rows",
            normalized.dim()
        )));
    }
    let q = check_regular(neighborhoods)?;
    if let Some(h) = neighborhoods
        .iter()
        .find(|h| h.node >= n || h.neighbors.iter().any(|&j| j >= n))
    {
        return Err(Error::validation(format!(
            "neighborhood of node {} is out of range",
            h.node
        )));
    }
    let b = params
        .b
        .unwrap_or_else(|| x.rows().into_iter().map(|r| r.dot(&r).sqrt()).fold(0.0, f64::max));

    let mut best = (f64::INFINITY, 0usize);
    for h in neighborhoods {
        let k = h.node;
        let mut weighted = ndarray::Array1::<f64>::zeros(x.ncols());
        let mut row_mass = 0.0;
        for &j in &h.neighbors {
            weighted.scaled_add(normalized[[j, k]], &x.row(j));
            row_mass += normalized[[k, j]];
        }
        let term = weighted.dot(&weighted).sqrt() * row_mass;
        if term < best.0 {
            best = (term, k);
        }
    }
    let scale = params.lipschitz.powi(2) * b * params.d_norm * params.r / (params.m as f64).sqrt();
    Ok(LowerBound {
        value: scale * best.0,
        q,
        argmin_node: best.1,
        min_term: best.0,
        b,
    })
}

/// Max absolute row sum.
pub fn inf_norm(s: &ArrayView2<f64>) -> f64 {
    s.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max Euclidean row norm.
pub fn two_to_inf_norm(m: &ArrayView2<f64>) -> f64 {
    m.rows().into_iter().map(|r| r.dot(&r).sqrt()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrcBound {
    pub value: f64,
    pub s_inf: f64,
    pub sx_two_inf: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// `(c1 n² / (m(n-m))) Σ_{k<K} (c2 ‖S‖_∞)^k + c3 (c2 ‖S‖_∞)^K ‖SX‖_{2→∞} √(ln n)`.
pub fn trc_upper_bound(s: &ArrayView2<f64>, x: &ArrayView2<f64>, params: &BoundParams) -> Result<TrcBound> {
    params.validate()?;
    if params.layers == 0 {
        return Err(Error::validation("layer count K must be >= 1"));
    }
    let n = params.n;
    if s.dim() != (n, n) || x.nrows() != n {
        return Err(Error::validation(format!(
            "S is {:?}, X is {:?}, expected {n} nodes",
            s.dim(),
            x.dim()
        )));
    }
    let s_inf = inf_norm(s);
    let sx_two_inf = two_to_inf_norm(&s.dot(x).view());
    let (c1, c2, c3) = (params.c1(), params.c2(), params.c3(x.ncols()));
    let (nf, mf) = (n as f64, params.m as f64);
    let ratio = c2 * s_inf;
    let series: f64 = (0..params.layers).map(|k| ratio.powi(k as i32)).sum();
    let value =
        c1 * nf * nf / (mf * (nf - mf)) * series + c3 * ratio.powi(params.layers as i32) * sx_two_inf * nf.ln().sqrt();
    Ok(TrcBound {
        value,
        s_inf,
        sx_two_inf,
        c1,
        c2,
        c3,
    })
}

/// `trc + c4 n √min(m, n-m) / (m(n-m)) + c5 √(n/(m(n-m)) · ln(1/δ))`.
pub fn generalization_gap_bound(trc: f64, params: &BoundParams, delta: f64) -> Result<f64> {
    params.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::validation(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (n, m) = (params.n as f64, params.m as f64);
    let u = n - m;
    Ok(trc + C4 * n * m.min(u).sqrt() / (m * u) + C5 * (n / (m * u) * (1.0 / delta).ln()).sqrt())
}
