//! `gen`: write a synthetic SBM graph directory.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use rgsla_core::graph::io::write_graph_dir;

use crate::error::Result;
use crate::plan::{maybe_load, require, resolve, SyntheticSpec};

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Plan file; its [gen] section supplies defaults for every flag.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Output graph directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated block sizes (default 30,30).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    /// Feature dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Distance of each block mean from the origin, along its own axis.
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Per-block train fraction; the rest is test (default 0.1).
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenPlan {
    out: Option<PathBuf>,
    sizes: Option<Vec<usize>>,
    p_in: Option<f64>,
    p_out: Option<f64>,
    dim: Option<usize>,
    separation: Option<f64>,
    noise_sd: Option<f64>,
    train_frac: Option<f64>,
    seed: Option<u64>,
}

pub fn run(args: GenArgs) -> Result<()> {
    let (plan, base): (GenPlan, _) = maybe_load(args.plan.as_deref(), "gen")?;
    let out = require(args.out.or(plan.out.map(|p| resolve(&base, p))), "--out")?;
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        sizes: args.sizes.or(plan.sizes).unwrap_or(d.sizes),
        p_in: args.p_in.or(plan.p_in).unwrap_or(d.p_in),
        p_out: args.p_out.or(plan.p_out).unwrap_or(d.p_out),
        dim: args.dim.or(plan.dim).unwrap_or(d.dim),
        separation: args.separation.or(plan.separation).unwrap_or(d.separation),
        noise_sd: args.noise_sd.or(plan.noise_sd).unwrap_or(d.noise_sd),
        train_frac: args.train_frac.or(plan.train_frac).unwrap_or(d.train_frac),
        seed: args.seed.or(plan.seed).unwrap_or(d.seed),
    };
    let graph = spec.generate(0)?;
    write_graph_dir(&graph, &out)?;
    println!(
        "{} nodes, {} edges, {} classes, {} train",
        graph.n(),
        graph.num_edges(),
        graph.num_classes,
        graph.num_train()
    );
    Ok(())
}
