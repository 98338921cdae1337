//! Alternating optimization of the GCN weights and the structure model,
//! plus the plain-GCN baseline.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView2};

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::gcn::{self, GcnParams};
use crate::graph::{normalize_adjacency, normalize_adjacency_backward, Graph, PrunePolicy};
use crate::regularizers::{alignment_loss_and_grad, smoothness_grad_wrt_similarity, smoothness_loss};
use crate::structure::{blend_adjacency, kernel_gradients, prox_l1, similarity_matrix, StructureParams};

/// Seed offset for power iterations, so they do not share a stream with
/// weight initialization.
const POWER_SEED_SALT: u64 = 0x05ee_d0f5_ca1e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    PlainGcn,
    Rgsla,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PlainGcn => "plain_gcn",
            Method::Rgsla => "rgsla",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain_gcn" => Ok(Method::PlainGcn),
            "rgsla" => Ok(Method::Rgsla),
            other => Err(Error::validation(format!("unknown method {other:?}"))),
        }
    }
}

/// Objective terms at one point of training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// Masked cross-entropy on the train nodes.
    pub l_gnn: f64,
    /// `tr(Xᵀ(D̃ - Ã)X)`.
    pub smoothness: f64,
    /// `λ1 ‖a‖₁`.
    pub sparsity: f64,
    /// `‖Xᵀ Â‖₂`.
    pub l_align: f64,
}

impl ObjectiveTerms {
    pub fn l_ss(&self) -> f64 {
        self.smoothness + self.sparsity
    }

    pub fn total(&self, cfg: &TrainConfig) -> f64 {
        self.l_gnn + cfg.gamma1 * self.l_ss() + cfg.gamma2 * self.l_align
    }

    /// The differentiable part that drives the structure gradient step;
    /// the L1 term is handled by the proximal step instead.
    pub fn structure_smooth_part(&self, cfg: &TrainConfig) -> f64 {
        let gnn = if cfg.include_gnn_in_structure_step {
            self.l_gnn
        } else {
            0.0
        };
        gnn + cfg.gamma1 * self.smoothness + cfg.gamma2 * self.l_align
    }

    fn check_finite(&self) -> Result<()> {
        let terms = [
            ("l_gnn", self.l_gnn),
            ("l_ss", self.smoothness + self.sparsity),
            ("l_align", self.l_align),
        ];
        for (name, v) in terms {
            if !v.is_finite() {
                return Err(Error::numeric(name, format!("objective term is {v}")));
            }
        }
        Ok(())
    }
}

/// One logged point of the objective trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveRecord {
    /// 0 is the initial state; `t` is after outer iteration `t`.
    pub iteration: usize,
    pub l_gnn: f64,
    pub l_ss: f64,
    pub l_align: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub method: Method,
    pub history: Vec<ObjectiveRecord>,
    /// Training loss before every GCN gradient step, in order.
    pub step_losses: Vec<f64>,
    /// Accuracy on the adjacency the classifier was trained with.
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    /// Test accuracy of the final classifier on `final_adjacency`.
    pub pruned_test_accuracy: f64,
    /// The output graph: the learned blend after pruning for RGSLA, the
    /// observed adjacency for the baseline.
    pub final_adjacency: Array2<f64>,
    pub gcn: GcnParams,
    /// `None` for the plain-GCN baseline.
    pub structure: Option<StructureParams>,
    pub wall_time: Duration,
    /// False when any power iteration hit its iteration cap.
    pub power_iteration_converged: bool,
}

impl TrainReport {
    pub fn final_record(&self) -> &ObjectiveRecord {
        self.history.last().expect("history always has the initial record")
    }
}

/// Structure gradient of the smooth objective part, with the terms it was
/// evaluated at.
#[derive(Debug, Clone)]
pub struct StructureGradient {
    pub projection: Array2<f64>,
    pub selector: Array1<f64>,
    pub terms: ObjectiveTerms,
    pub power_converged: bool,
}

fn validate_inputs(graph: &Graph, cfg: &TrainConfig) -> Result<()> {
    graph.validate()?;
    cfg.validate()?;
    if !graph.test_mask.iter().any(|&b| b) {
        return Err(Error::validation("test mask is empty"));
    }
    if let Some(p) = cfg.projection_dim {
        if p > graph.d() {
            return Err(Error::validation(format!(
                "projection_dim {p} exceeds feature dimension {}",
                graph.d()
            )));
        }
    }
    Ok(())
}

fn power_seed(cfg: &TrainConfig) -> u64 {
    cfg.seed ^ POWER_SEED_SALT
}

/// Learned similarity, blend and normalization for the current structure.
struct Built {
    similarity: Array2<f64>,
    degrees: Array1<f64>,
    blended: Array2<f64>,
}

fn build(graph: &Graph, structure: &StructureParams) -> Result<Built> {
    let learned = similarity_matrix(structure, &graph.features.view())?;
    let blended = blend_adjacency(&graph.adjacency.view(), &learned.similarity.view(), structure.alpha)?;
    Ok(Built {
        similarity: learned.similarity,
        degrees: learned.degrees,
        blended,
    })
}

/// Evaluates every objective term at `(structure, gcn)`.
pub fn objective_terms(
    graph: &Graph,
    cfg: &TrainConfig,
    structure: &StructureParams,
    gcn_params: &GcnParams,
) -> Result<ObjectiveTerms> {
    let built = build(graph, structure)?;
    let x = graph.features.view();
    let normalized = normalize_adjacency(&built.blended.view())?;
    let cache = gcn::forward(gcn_params, &normalized, &x)?;
    let l_gnn = gcn::masked_cross_entropy(&cache, &graph.labels, &graph.train_mask)?;
    let smoothness = smoothness_loss(&x, &built.similarity.view(), &built.degrees.view())?;
    let align = alignment_loss_and_grad(
        &x,
        &built.blended.view(),
        cfg.power_tol,
        cfg.power_max_iter,
        power_seed(cfg),
    )?;
    Ok(ObjectiveTerms {
        l_gnn,
        smoothness,
        sparsity: cfg.lambda1 * structure.selector.iter().map(|v| v.abs()).sum::<f64>(),
        l_align: align.loss,
    })
}

/// Gradient of `[L_gnn] + γ1 tr(Xᵀ(D̃-Ã)X) + γ2 ‖XᵀÂ‖₂` with respect to
/// `M` and `a`, holding the GCN weights fixed. The classification loss
/// reaches `Ã` through the normalization of `Â` and the blend.
pub fn structure_gradient(
    graph: &Graph,
    cfg: &TrainConfig,
    structure: &StructureParams,
    gcn_params: &GcnParams,
) -> Result<StructureGradient> {
    let x = graph.features.view();
    let built = build(graph, structure)?;
    let n = graph.n();

    let normalized = normalize_adjacency(&built.blended.view())?;
    let cache = gcn::forward(gcn_params, &normalized, &x)?;
    let l_gnn = gcn::masked_cross_entropy(&cache, &graph.labels, &graph.train_mask)?;
    let smoothness = smoothness_loss(&x, &built.similarity.view(), &built.degrees.view())?;
    let align = alignment_loss_and_grad(
        &x,
        &built.blended.view(),
        cfg.power_tol,
        cfg.power_max_iter,
        power_seed(cfg),
    )?;

    // dF/dÂ, then dF/dÃ = α dF/dÂ + γ1 dL_ss/dÃ
    let mut d_blended = align.grad * cfg.gamma2;
    if cfg.include_gnn_in_structure_step {
        let grads = gcn::backward(gcn_params, &cache, &graph.labels, &graph.train_mask)?;
        d_blended += &normalize_adjacency_backward(&built.blended.view(), &grads.adjacency.view());
    }
    let mut upstream = d_blended * structure.alpha;
    if cfg.gamma1 != 0.0 {
        upstream.scaled_add(cfg.gamma1, &smoothness_grad_wrt_similarity(&x));
    }
    debug_assert_eq!(upstream.dim(), (n, n));
    let (d_projection, d_selector) = kernel_gradients(structure, &x, &upstream.view())?;

    let terms = ObjectiveTerms {
        l_gnn,
        smoothness,
        sparsity: cfg.lambda1 * structure.selector.iter().map(|v| v.abs()).sum::<f64>(),
        l_align: align.loss,
    };
    terms.check_finite()?;
    Ok(StructureGradient {
        projection: d_projection,
        selector: d_selector,
        terms,
        power_converged: align.converged,
    })
}

fn record(iteration: usize, terms: &ObjectiveTerms, cfg: &TrainConfig) -> ObjectiveRecord {
    ObjectiveRecord {
        iteration,
        l_gnn: terms.l_gnn,
        l_ss: terms.l_ss(),
        l_align: terms.l_align,
        total: terms.total(cfg),
    }
}

fn gcn_step(
    params: &GcnParams,
    adjacency: &crate::graph::NormalizedAdjacency,
    graph: &Graph,
    lr: f64,
    losses: &mut Vec<f64>,
) -> Result<GcnParams> {
    let cache = gcn::forward(params, adjacency, &graph.features.view())?;
    let loss = gcn::masked_cross_entropy(&cache, &graph.labels, &graph.train_mask)?;
    if !loss.is_finite() {
        return Err(Error::numeric("l_gnn", format!("training loss is {loss}")));
    }
    losses.push(loss);
    let grads = gcn::backward(params, &cache, &graph.labels, &graph.train_mask)?;
    Ok(gcn::sgd_step(params, &grads, lr))
}

fn accuracies(graph: &Graph, params: &GcnParams, adjacency: &ArrayView2<f64>) -> Result<(f64, f64)> {
    let normalized = normalize_adjacency(adjacency)?;
    let cache = gcn::forward(params, &normalized, &graph.features.view())?;
    Ok((
        gcn::evaluate_accuracy(&cache, &graph.labels, &graph.test_mask)?,
        gcn::evaluate_accuracy(&cache, &graph.labels, &graph.train_mask)?,
    ))
}

/// Runs the alternating scheme: each outer iteration performs
/// `structure_iters` rounds of {rebuild `Ã` and `Â`; `gcn_iters` GCN
/// steps; one gradient step on `M`; one proximal-gradient step on `a`}.
/// Pruning is applied once at the end.
pub fn run_rgsla(graph: &Graph, cfg: &TrainConfig) -> Result<TrainReport> {
    let start = Instant::now();
    validate_inputs(graph, cfg)?;
    let d = graph.d();
    let p = cfg.projection_dim.unwrap_or(d);
    let mut structure = StructureParams::identity_init(d, p, cfg.tau, cfg.alpha)?;
    let mut params = GcnParams::init(d, cfg.hidden, graph.num_classes, cfg.seed);

    let initial = objective_terms(graph, cfg, &structure, &params)?;
    initial.check_finite()?;
    let mut history = vec![record(0, &initial, cfg)];
    let mut step_losses = Vec::with_capacity(cfg.outer_iters * cfg.structure_iters * cfg.gcn_iters);
    let mut power_ok = true;

    for t in 0..cfg.outer_iters {
        for _ in 0..cfg.structure_iters {
            let built = build(graph, &structure)?;
            let normalized = normalize_adjacency(&built.blended.view())?;
            for _ in 0..cfg.gcn_iters {
                params = gcn_step(&params, &normalized, graph, cfg.lr_gcn, &mut step_losses)?;
            }

            let grad = structure_gradient(graph, cfg, &structure, &params)?;
            power_ok &= grad.power_converged;
            structure.projection.scaled_add(-cfg.lr_structure, &grad.projection);
            let moved = &structure.selector - &(cfg.lr_structure * &grad.selector);
            structure.selector = prox_l1(&moved.view(), cfg.lr_structure * cfg.lambda1)?;
        }
        let terms = objective_terms(graph, cfg, &structure, &params)?;
        terms.check_finite()?;
        history.push(record(t + 1, &terms, cfg));
    }

    let built = build(graph, &structure)?;
    let (test_accuracy, train_accuracy) = accuracies(graph, &params, &built.blended.view())?;
    let final_adjacency = cfg.prune.apply(&built.blended.view())?;
    let pruned_test_accuracy = if cfg.prune == PrunePolicy::None {
        test_accuracy
    } else {
        accuracies(graph, &params, &final_adjacency.view())?.0
    };
    Ok(TrainReport {
        method: Method::Rgsla,
        history,
        step_losses,
        test_accuracy,
        train_accuracy,
        pruned_test_accuracy,
        final_adjacency,
        gcn: params,
        structure: Some(structure),
        wall_time: start.elapsed(),
        power_iteration_converged: power_ok,
    })
}

/// The baseline: the same GCN trained by gradient descent on the observed
/// adjacency.
pub fn train_plain_gcn(graph: &Graph, lr: f64, epochs: usize, hidden: usize, seed: u64) -> Result<TrainReport> {
    let start = Instant::now();
    graph.validate()?;
    if !graph.test_mask.iter().any(|&b| b) {
        return Err(Error::validation("test mask is empty"));
    }
    if !(lr > 0.0) || hidden == 0 {
        return Err(Error::validation("need lr > 0 and hidden >= 1"));
    }
    let normalized = normalize_adjacency(&graph.adjacency.view())?;
    let mut params = GcnParams::init(graph.d(), hidden, graph.num_classes, seed);
    let x = graph.features.view();

    let gnn_record = |iteration: usize, params: &GcnParams| -> Result<ObjectiveRecord> {
        let cache = gcn::forward(params, &normalized, &x)?;
        let l_gnn = gcn::masked_cross_entropy(&cache, &graph.labels, &graph.train_mask)?;
        if !l_gnn.is_finite() {
            return Err(Error::numeric("l_gnn", format!("training loss is {l_gnn}")));
        }
        Ok(ObjectiveRecord {
            iteration,
            l_gnn,
            l_ss: 0.0,
            l_align: 0.0,
            total: l_gnn,
        })
    };

    let mut history = vec![gnn_record(0, &params)?];
    let mut step_losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        params = gcn_step(&params, &normalized, graph, lr, &mut step_losses)?;
        history.push(gnn_record(epoch + 1, &params)?);
    }
    let (test_accuracy, train_accuracy) = accuracies(graph, &params, &graph.adjacency.view())?;
    Ok(TrainReport {
        method: Method::PlainGcn,
        history,
        step_losses,
        test_accuracy,
        train_accuracy,
        pruned_test_accuracy: test_accuracy,
        final_adjacency: graph.adjacency.clone(),
        gcn: params,
        structure: None,
        wall_time: start.elapsed(),
        power_iteration_converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sbm_generate, SbmSpec};
    use crate::structure::blend_adjacency;

    fn small_graph(seed: u64) -> Graph {
        sbm_generate(&SbmSpec {
            train_frac: 0.3,
            ..SbmSpec::axis_separated(vec![6, 6], 0.6, 0.1, 3, 2.0, 0.5, seed)
        })
        .unwrap()
    }

    #[test]
    fn zero_outer_iterations_returns_initial_state() {
        let g = small_graph(1);
        let cfg = TrainConfig {
            outer_iters: 0,
            ..Default::default()
        };
        let report = run_rgsla(&g, &cfg).unwrap();
        assert_eq!(report.history.len(), 1);
        assert!(report.step_losses.is_empty());
        let init = StructureParams::identity_init(g.d(), g.d(), cfg.tau, cfg.alpha).unwrap();
        let learned = similarity_matrix(&init, &g.features.view()).unwrap();
        let expect = blend_adjacency(&g.adjacency.view(), &learned.similarity.view(), cfg.alpha).unwrap();
        assert_eq!(report.final_adjacency, expect);
        assert_eq!(report.gcn, GcnParams::init(g.d(), cfg.hidden, 2, cfg.seed));
    }

    #[test]
    fn recorded_total_is_consistent() {
        let g = small_graph(2);
        let cfg = TrainConfig {
            outer_iters: 3,
            ..Default::default()
        };
        let report = run_rgsla(&g, &cfg).unwrap();
        assert_eq!(report.history.len(), 4);
        for r in &report.history {
            let total = r.l_gnn + cfg.gamma1 * r.l_ss + cfg.gamma2 * r.l_align;
            assert!((r.total - total).abs() <= 1e-9);
        }
    }

    #[test]
    fn plain_gcn_zero_epochs_is_random_init() {
        let g = small_graph(3);
        let report = train_plain_gcn(&g, 0.1, 0, 8, 5).unwrap();
        let params = GcnParams::init(g.d(), 8, 2, 5);
        let normalized = normalize_adjacency(&g.adjacency.view()).unwrap();
        let cache = gcn::forward(&params, &normalized, &g.features.view()).unwrap();
        let acc = gcn::evaluate_accuracy(&cache, &g.labels, &g.test_mask).unwrap();
        assert_eq!(report.test_accuracy, acc);
        assert_eq!(report.gcn, params);
    }

    #[test]
    fn divergence_is_reported_with_term() {
        let g = small_graph(4);
        let cfg = TrainConfig {
            lr_gcn: 1e12,
            outer_iters: 5,
            ..Default::default()
        };
        match run_rgsla(&g, &cfg) {
            Err(Error::Numeric { .. }) => {}
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_projection_larger_than_d() {
        let g = small_graph(5);
        let cfg = TrainConfig {
            projection_dim: Some(10),
            ..Default::default()
        };
        assert!(matches!(run_rgsla(&g, &cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn method_names_parse() {
        for m in [Method::PlainGcn, Method::Rgsla] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("gat".parse::<Method>().is_err());
    }
}
