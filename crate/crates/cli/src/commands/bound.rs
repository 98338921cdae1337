//! `bound`: evaluate the Rademacher lower bound and the TRC upper bound on a
//! graph, with the quantities they are built from.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use rgsla_core::bounds::{
    generalization_gap_bound, modal_degree_neighborhoods, rademacher_lower_bound, regular_neighborhoods,
    trc_upper_bound, BoundParams,
};
use rgsla_core::graph::normalize_adjacency;

use crate::error::Result;
use crate::output::{csv_writer, finish_csv, write_record};
use crate::plan::{maybe_load, read_graph, require, resolve};

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Plan file; its [bound] section supplies defaults for every flag.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Graph directory; m is its train count, n its node count.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Also write the printed quantities to this CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Frobenius-norm bound R on W1 (default 1).
    #[arg(long)]
    pub r: Option<f64>,
    /// Spectral-norm bound D on W2 (default 1).
    #[arg(long)]
    pub d_norm: Option<f64>,
    /// Activation Lipschitz constant (default 1).
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Max feature row norm B; measured from the features when omitted.
    #[arg(long)]
    pub b: Option<f64>,
    /// Bias-norm bound (default 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Weight ∞-norm bound (default 1).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Layer count K (default 2).
    #[arg(long)]
    pub layers: Option<usize>,
    /// Confidence parameter of the gap bound (default 0.05).
    #[arg(long)]
    pub delta: Option<f64>,
    /// On irregular graphs, take the lower bound's minimum over the nodes of
    /// the most common degree instead of failing.
    #[arg(long)]
    pub modal_degree: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BoundPlan {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    r: Option<f64>,
    d_norm: Option<f64>,
    lipschitz: Option<f64>,
    b: Option<f64>,
    beta: Option<f64>,
    omega: Option<f64>,
    layers: Option<usize>,
    delta: Option<f64>,
    modal_degree: Option<bool>,
}

pub fn run(args: BoundArgs) -> Result<()> {
    let (plan, base): (BoundPlan, _) = maybe_load(args.plan.as_deref(), "bound")?;
    let data = require(args.data.or(plan.data.map(|p| resolve(&base, p))), "--data")?;
    let out = args.out.or(plan.out.map(|p| resolve(&base, p)));
    let modal = args.modal_degree || plan.modal_degree.unwrap_or(false);
    let delta = args.delta.or(plan.delta).unwrap_or(0.05);

    let graph = read_graph(&data)?;
    let params = BoundParams {
        r: args.r.or(plan.r).unwrap_or(1.0),
        d_norm: args.d_norm.or(plan.d_norm).unwrap_or(1.0),
        lipschitz: args.lipschitz.or(plan.lipschitz).unwrap_or(1.0),
        b: args.b.or(plan.b),
        m: graph.num_train(),
        n: graph.n(),
        beta: args.beta.or(plan.beta).unwrap_or(1.0),
        omega: args.omega.or(plan.omega).unwrap_or(1.0),
        layers: args.layers.or(plan.layers).unwrap_or(2),
    };
    params.validate()?;

    let normalized = normalize_adjacency(&graph.adjacency.view())?;
    let x = graph.features.view();
    let hoods = if modal {
        modal_degree_neighborhoods(&graph.adjacency.view())?
    } else {
        regular_neighborhoods(&graph.adjacency.view())?
    };
    let lower = rademacher_lower_bound(&normalized.matrix().view(), &x, &params, &hoods)?;
    let trc = trc_upper_bound(&normalized.matrix().view(), &x, &params)?;
    let gap = generalization_gap_bound(trc.value, &params, delta)?;

    let rows: Vec<(&str, String)> = vec![
        ("n", params.n.to_string()),
        ("m", params.m.to_string()),
        ("q", lower.q.to_string()),
        ("nodes_in_min", hoods.len().to_string()),
        ("B", lower.b.to_string()),
        ("argmin_node", lower.argmin_node.to_string()),
        ("min_term", lower.min_term.to_string()),
        ("lower_bound", lower.value.to_string()),
        ("s_inf_norm", trc.s_inf.to_string()),
        ("sx_two_to_inf_norm", trc.sx_two_inf.to_string()),
        ("c1", trc.c1.to_string()),
        ("c2", trc.c2.to_string()),
        ("c3", trc.c3.to_string()),
        ("trc_upper_bound", trc.value.to_string()),
        ("delta", delta.to_string()),
        ("gap_bound", gap.to_string()),
    ];
    for (k, v) in &rows {
        println!("{k}\t{v}");
    }
    if let Some(path) = out {
        let mut w = csv_writer(&path)?;
        write_record(&mut w, &path, ["quantity", "value"])?;
        for (k, v) in &rows {
            write_record(&mut w, &path, [k.to_string(), v.clone()])?;
        }
        finish_csv(w, &path)?;
    }
    Ok(())
}
