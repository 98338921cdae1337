//! Two-layer GCN `softmax(Ā · ReLU(Ā X W1) · W2)` with hand-written
//! backpropagation, including the gradient with respect to `Ā`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    /// d × k
    pub w1: Array2<f64>,
    /// k × C
    pub w2: Array2<f64>,
}

impl GcnParams {
    /// Glorot-uniform initialization, `W1` drawn before `W2` from one
    /// ChaCha8 stream.
    pub fn init(d: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
        };
        let w1 = glorot(d, hidden);
        let w2 = glorot(hidden, classes);
        GcnParams { w1, w2 }
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn classes(&self) -> usize {
        self.w2.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct GcnGrads {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    /// Gradient with respect to the normalized adjacency, every entry
    /// treated as independent.
    pub adjacency: Array2<f64>,
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub adjacency: Array2<f64>,
    /// Ā X
    pub propagated: Array2<f64>,
    /// X W1
    pub projected: Array2<f64>,
    /// Z1 = Ā X W1
    pub pre_activation: Array2<f64>,
    /// H1 = ReLU(Z1)
    pub hidden: Array2<f64>,
    /// Ā H1
    pub aggregated: Array2<f64>,
    /// Z2 = Ā H1 W2
    pub logits: Array2<f64>,
    /// row-softmax(Z2)
    pub probs: Array2<f64>,
}

fn check_finite(m: &Array2<f64>, layer: &str) -> Result<()> {
    if let Some(v) = m.iter().find(|v| !v.is_finite()) {
        return Err(Error::numeric(layer, format!("non-finite value {v}")));
    }
    Ok(())
}

/// Row softmax with per-row max subtraction.
pub fn softmax_rows(logits: &ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

pub fn forward(params: &GcnParams, adjacency: &NormalizedAdjacency, x: &ArrayView2<f64>) -> Result<ForwardCache> {
    let a = adjacency.matrix();
    let n = a.nrows();
    if x.nrows() != n {
        return Err(Error::validation(format!(
            "features have {} rows, adjacency is {n}x{n}",
            x.nrows()
        )));
    }
    if x.ncols() != params.w1.nrows() || params.w1.ncols() != params.w2.nrows() {
        return Err(Error::validation(format!(
            "shape mismatch: X is {:?}, W1 is {:?}, W2 is {:?}",
            x.dim(),
            params.w1.dim(),
            params.w2.dim()
        )));
    }
    let propagated = a.dot(x);
    let projected = x.dot(&params.w1);
    let pre_activation = propagated.dot(&params.w1);
    check_finite(&pre_activation, "layer 1")?;
    let hidden = pre_activation.mapv(|v| v.max(0.0));
    let aggregated = a.dot(&hidden);
    let logits = aggregated.dot(&params.w2);
    check_finite(&logits, "layer 2")?;
    let probs = softmax_rows(&logits.view());
    check_finite(&probs, "softmax")?;
    Ok(ForwardCache {
        adjacency: a.clone(),
        propagated,
        projected,
        pre_activation,
        hidden,
        aggregated,
        logits,
        probs,
    })
}

fn masked_count(mask: &[bool]) -> Result<usize> {
    let m = mask.iter().filter(|&&b| b).count();
    if m == 0 {
        return Err(Error::validation("mask selects no nodes"));
    }
    Ok(m)
}

/// Mean of `-ln P[i, y_i]` over masked nodes.
pub fn masked_cross_entropy(cache: &ForwardCache, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let m = masked_count(mask)?;
    let total: f64 = (0..cache.probs.nrows())
        .filter(|&i| mask[i])
        .map(|i| -cache.probs[[i, labels[i]]].ln())
        .sum();
    Ok(total / m as f64)
}

/// Fraction of masked nodes whose arg-max class equals the label; ties go
/// to the lowest class index.
pub fn evaluate_accuracy(cache: &ForwardCache, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let m = masked_count(mask)?;
    let correct = (0..cache.probs.nrows())
        .filter(|&i| mask[i])
        .filter(|&i| argmax(cache.probs.row(i).iter().copied()) == labels[i])
        .count();
    Ok(correct as f64 / m as f64)
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Exact gradients of [`masked_cross_entropy`]. The softmax and
/// cross-entropy are fused, `dZ2 = (P - onehot) / m` on masked rows.
/// `Ā` appears twice, so its gradient has one term per layer.
pub fn backward(params: &GcnParams, cache: &ForwardCache, labels: &[usize], mask: &[bool]) -> Result<GcnGrads> {
    let m = masked_count(mask)? as f64;
    let mut d_logits = Array2::<f64>::zeros(cache.probs.dim());
    for i in (0..cache.probs.nrows()).filter(|&i| mask[i]) {
        let mut row = d_logits.row_mut(i);
        row.assign(&cache.probs.row(i));
        row[labels[i]] -= 1.0;
        row /= m;
    }
    let a = &cache.adjacency;

    let w2 = cache.aggregated.t().dot(&d_logits);
    let d_aggregated = d_logits.dot(&params.w2.t());
    let mut d_adjacency = d_aggregated.dot(&cache.hidden.t());
    let d_hidden = a.t().dot(&d_aggregated);
    let mut d_pre = d_hidden;
    ndarray::Zip::from(&mut d_pre)
        .and(&cache.pre_activation)
        .for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });
    let w1 = cache.propagated.t().dot(&d_pre);
    d_adjacency += &d_pre.dot(&cache.projected.t());
    Ok(GcnGrads {
        w1,
        w2,
        adjacency: d_adjacency,
    })
}

/// `Θ ← Θ - η ∇Θ`.
pub fn sgd_step(params: &GcnParams, grads: &GcnGrads, lr: f64) -> GcnParams {
    GcnParams {
        w1: &params.w1 - &(lr * &grads.w1),
        w2: &params.w2 - &(lr * &grads.w2),
    }
}

/// Row arg-max predictions.
pub fn predictions(cache: &ForwardCache) -> Array1<usize> {
    cache
        .probs
        .axis_iter(Axis(0))
        .map(|row| argmax(row.iter().copied()))
        .collect()
}
