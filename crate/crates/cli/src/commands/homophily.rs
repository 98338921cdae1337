//! `homophily`: per-node same-label neighbor ratios and their histogram.

use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use rgsla_core::graph::homophily_ratios;
use rgsla_core::graph::io::read_weighted_edges;

use crate::error::Result;
use crate::output::{create_dir, csv_writer, finish_csv, write_record};
use crate::plan::{maybe_load, read_graph, require, resolve};

pub const RATIOS: &str = "homophily.csv";
pub const HISTOGRAM: &str = "homophily_hist.csv";
pub const BINS: usize = 10;

#[derive(Debug, Args)]
pub struct HomophilyArgs {
    /// Plan file; its [homophily] section supplies defaults for every flag.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Graph directory whose adjacency is the raw graph.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Learned weighted adjacency (i, j, w lines), e.g. from `train --save-adjacency`.
    #[arg(long)]
    pub learned: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HomophilyPlan {
    data: Option<PathBuf>,
    learned: Option<PathBuf>,
    out: Option<PathBuf>,
}

/// Counts of ratios in the bins `[0, .1), …, [.9, 1]`.
pub fn histogram(ratios: &[f64]) -> [usize; BINS] {
    let mut counts = [0; BINS];
    for &r in ratios {
        let bin = ((r * BINS as f64).floor() as usize).min(BINS - 1);
        counts[bin] += 1;
    }
    counts
}

pub fn run(args: HomophilyArgs) -> Result<()> {
    let (plan, base): (HomophilyPlan, _) = maybe_load(args.plan.as_deref(), "homophily")?;
    let data = require(args.data.or(plan.data.map(|p| resolve(&base, p))), "--data")?;
    let out = require(args.out.or(plan.out.map(|p| resolve(&base, p))), "--out")?;
    let learned_path = args.learned.or(plan.learned.map(|p| resolve(&base, p)));

    let graph = read_graph(&data)?;
    let raw = homophily_ratios(&graph, &graph.adjacency.view())?;
    let learned = match &learned_path {
        Some(p) => Some(homophily_ratios(&graph, &read_weighted_edges(p, graph.n())?.view())?),
        None => None,
    };

    create_dir(&out)?;
    let path = out.join(RATIOS);
    let mut w = csv_writer(&path)?;
    write_record(&mut w, &path, ["node", "r_raw", "r_learned"])?;
    for (i, r) in raw.iter().enumerate() {
        let l = learned.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
        write_record(&mut w, &path, [i.to_string(), r.to_string(), l])?;
    }
    finish_csv(w, &path)?;

    let path = out.join(HISTOGRAM);
    let mut w = csv_writer(&path)?;
    write_record(&mut w, &path, ["bin_lower", "bin_upper", "raw", "learned"])?;
    let raw_counts = histogram(&raw);
    let learned_counts = learned.as_deref().map(histogram);
    for b in 0..BINS {
        write_record(
            &mut w,
            &path,
            [
                (b as f64 / BINS as f64).to_string(),
                ((b + 1) as f64 / BINS as f64).to_string(),
                raw_counts[b].to_string(),
                learned_counts.map(|c| c[b].to_string()).unwrap_or_default(),
            ],
        )?;
    }
    finish_csv(w, &path)?;

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    match &learned {
        Some(l) => println!("mean r raw {} learned {}", mean(&raw), mean(l)),
        None => println!("mean r raw {}", mean(&raw)),
    }
    Ok(())
}
