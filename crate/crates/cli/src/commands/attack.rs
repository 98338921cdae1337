//! `attack`: poison a graph directory and record what was done.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use rgsla_core::attack::{attack_budget, pair_differences, AttackKind, AttackSpec};
use rgsla_core::graph::io::write_graph_dir;

use crate::error::Result;
use crate::output::write_text;
use crate::plan::{maybe_load, read_graph, require, resolve};

pub const MANIFEST: &str = "attack_manifest.tsv";

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Plan file; its [attack] section supplies defaults for every flag.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Input graph directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output graph directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// random_flip or feature_difference.
    #[arg(long)]
    pub kind: Option<String>,
    /// Perturbation rate in [0, 0.5], relative to the input edge count.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AttackPlan {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    kind: Option<String>,
    rate: Option<f64>,
    seed: Option<u64>,
}

pub fn run(args: AttackArgs) -> Result<()> {
    let (plan, base): (AttackPlan, _) = maybe_load(args.plan.as_deref(), "attack")?;
    let data = require(args.data.or(plan.data.map(|p| resolve(&base, p))), "--data")?;
    let out = require(args.out.or(plan.out.map(|p| resolve(&base, p))), "--out")?;
    let kind: AttackKind = require(args.kind.or(plan.kind), "--kind")?.parse()?;
    let spec = AttackSpec {
        kind,
        rate: require(args.rate.or(plan.rate), "--rate")?,
        seed: args.seed.or(plan.seed).unwrap_or(0),
    };
    spec.validate()?;

    let graph = read_graph(&data)?;
    let poisoned = spec.apply(&graph)?;
    let changed = pair_differences(&graph.adjacency.view(), &poisoned.view());
    let budget = attack_budget(&graph.adjacency.view(), spec.rate);
    write_graph_dir(&graph.with_adjacency(poisoned)?, &out)?;
    write_text(
        &out.join(MANIFEST),
        &format!(
            "kind\t{}\nrate\t{}\nseed\t{}\nbudget\t{budget}\npairs_changed\t{changed}\n",
            kind.as_str(),
            spec.rate,
            spec.seed
        ),
    )?;
    println!("{} at rate {}: {changed} node pairs changed", kind.as_str(), spec.rate);
    Ok(())
}
