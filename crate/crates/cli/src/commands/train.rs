//! `train`: a sweep over methods × attack rates × seeds.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;
use toml::Table;

use rgsla_core::attack::{AttackKind, AttackSpec};
use rgsla_core::config::TrainConfig;
use rgsla_core::graph::io::{write_graph_dir, write_weighted_edges};
use rgsla_core::graph::Graph;
use rgsla_core::trainer::{run_rgsla, train_plain_gcn, Method, TrainReport};

use crate::error::{CliError, Result};
use crate::output::{create_dir, csv_writer, finish_csv, write_record};
use crate::plan::{maybe_load, parse_overrides, read_graph, resolve, train_config, SyntheticSpec};

pub const RESULTS: &str = "results.csv";
pub const HEADER: [&str; 9] = [
    "method", "attack", "rate", "seed", "accuracy", "l_gnn", "l_ss", "l_align", "wall_ms",
];

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Plan file; its [train] section supplies defaults for every flag.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Graph directory (alternative to a [train.synthetic] plan section).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated: plain_gcn, rgsla.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// random_flip or feature_difference; required when any rate is > 0.
    #[arg(long)]
    pub attack: Option<String>,
    /// Comma-separated perturbation rates in [0, 0.5].
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Number of seeds, starting at the config seed.
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Baseline epochs; defaults to the GCN step count of an RGSLA run.
    #[arg(long)]
    pub plain_epochs: Option<usize>,
    /// Fill the wall_ms column (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
    /// Write each learned adjacency under adjacency/ and each input graph
    /// under graphs/.
    #[arg(long)]
    pub save_adjacency: bool,
    /// Training config override, KEY=VALUE with a TOML value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainPlan {
    data: Option<PathBuf>,
    synthetic: Option<SyntheticSpec>,
    out: Option<PathBuf>,
    methods: Option<Vec<String>>,
    attack: Option<String>,
    rates: Option<Vec<f64>>,
    repeat: Option<usize>,
    plain_epochs: Option<usize>,
    timing: Option<bool>,
    save_adjacency: Option<bool>,
    config: Option<Table>,
}

enum Source {
    Dir(Graph),
    Synthetic(SyntheticSpec),
}

impl Source {
    /// Synthetic graphs are regenerated per seed, offset from their base seed.
    fn graph(&self, seed: u64) -> Result<Graph> {
        match self {
            Source::Dir(g) => Ok(g.clone()),
            Source::Synthetic(spec) => spec.generate(seed),
        }
    }
}

/// The resolved sweep.
pub struct Sweep {
    source: Source,
    out: PathBuf,
    methods: Vec<Method>,
    attack: Option<AttackKind>,
    rates: Vec<f64>,
    seeds: Vec<u64>,
    plain_epochs: usize,
    timing: bool,
    save_adjacency: bool,
    config: TrainConfig,
}

fn resolve_sweep(args: TrainArgs) -> Result<Sweep> {
    let (plan, base): (TrainPlan, _) = maybe_load(args.plan.as_deref(), "train")?;

    let source = match (args.data, plan.data.map(|p| resolve(&base, p)), plan.synthetic) {
        (Some(dir), _, _) | (None, Some(dir), _) => Source::Dir(read_graph(&dir)?),
        (None, None, Some(spec)) => Source::Synthetic(spec),
        (None, None, None) => {
            return Err(CliError::usage(
                "no dataset: pass --data or a [train.synthetic] section",
            ))
        }
    };
    let out = args
        .out
        .or(plan.out.map(|p| resolve(&base, p)))
        .ok_or_else(|| CliError::usage("missing required --out"))?;

    let names = args
        .methods
        .or(plan.methods)
        .unwrap_or_else(|| vec!["plain_gcn".into(), "rgsla".into()]);
    let mut methods = Vec::new();
    for name in &names {
        let m: Method = name.trim().parse()?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(CliError::usage("method list is empty"));
    }

    let attack = args
        .attack
        .or(plan.attack)
        .map(|s| s.parse::<AttackKind>())
        .transpose()?;
    let rates = args.rates.or(plan.rates).unwrap_or_else(|| vec![0.0]);
    if rates.is_empty() {
        return Err(CliError::usage("rate list is empty"));
    }
    for &r in &rates {
        if !(0.0..=0.5).contains(&r) {
            return Err(CliError::usage(format!("rate {r} outside [0, 0.5]")));
        }
        if r > 0.0 && attack.is_none() {
            return Err(CliError::usage("rates above 0 need an attack kind"));
        }
    }

    let repeat = args.repeat.or(plan.repeat).unwrap_or(1);
    if repeat == 0 {
        return Err(CliError::usage("repeat must be at least 1"));
    }
    let mut table = plan.config.unwrap_or_default();
    table.extend(parse_overrides(&args.set)?);
    let config = train_config(table)?;
    let seeds = (0..repeat as u64).map(|r| config.seed.wrapping_add(r)).collect();
    let plain_epochs = args
        .plain_epochs
        .or(plan.plain_epochs)
        .unwrap_or(config.outer_iters * config.structure_iters * config.gcn_iters);

    Ok(Sweep {
        source,
        out,
        methods,
        attack,
        rates,
        seeds,
        plain_epochs,
        timing: args.timing || plan.timing.unwrap_or(false),
        save_adjacency: args.save_adjacency || plan.save_adjacency.unwrap_or(false),
        config,
    })
}

struct Row {
    method: Method,
    rate_idx: usize,
    seed: u64,
    report: TrainReport,
}

struct Cell {
    rate_idx: usize,
    seed: u64,
    graph: Graph,
    rows: Vec<Row>,
}

fn run_cell(sweep: &Sweep, rate_idx: usize, seed: u64) -> Result<Cell> {
    let graph = sweep.source.graph(seed)?;
    let rate = sweep.rates[rate_idx];
    let graph = match sweep.attack {
        Some(kind) if rate > 0.0 => graph.with_adjacency(AttackSpec { kind, rate, seed }.apply(&graph)?)?,
        _ => graph,
    };
    let cfg = TrainConfig {
        seed,
        ..sweep.config.clone()
    };
    let rows = sweep
        .methods
        .iter()
        .map(|&method| {
            let report = match method {
                Method::PlainGcn => train_plain_gcn(&graph, cfg.lr_gcn, sweep.plain_epochs, cfg.hidden, seed)?,
                Method::Rgsla => run_rgsla(&graph, &cfg)?,
            };
            Ok(Row {
                method,
                rate_idx,
                seed,
                report,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Cell {
        rate_idx,
        seed,
        graph,
        rows,
    })
}

fn wall_ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

/// Where `--save-adjacency` puts a learned adjacency.
pub fn adjacency_file(out: &Path, method: Method, rate: f64, seed: u64) -> PathBuf {
    out.join("adjacency")
        .join(format!("{}_rate{rate}_seed{seed}.tsv", method.as_str()))
}

/// Where `--save-adjacency` puts the (possibly poisoned) input graph of a cell.
pub fn graph_dir(out: &Path, rate: f64, seed: u64) -> PathBuf {
    out.join("graphs").join(format!("rate{rate}_seed{seed}"))
}

pub fn run(args: TrainArgs) -> Result<()> {
    let sweep = resolve_sweep(args)?;
    let cells: Vec<(usize, u64)> = (0..sweep.rates.len())
        .flat_map(|r| sweep.seeds.iter().map(move |&s| (r, s)))
        .collect();
    // cells run in parallel; errors and rows are taken back in cell order
    let results: Vec<Result<Cell>> = cells.par_iter().map(|&(r, s)| run_cell(&sweep, r, s)).collect();
    let mut done = Vec::with_capacity(results.len());
    for res in results {
        done.push(res?);
    }
    let mut rows: Vec<&Row> = done.iter().flat_map(|c| &c.rows).collect();
    let method_pos = |m: Method| sweep.methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (method_pos(r.method), r.rate_idx, r.seed));

    create_dir(&sweep.out)?;
    let path = sweep.out.join(RESULTS);
    let mut w = csv_writer(&path)?;
    write_record(&mut w, &path, HEADER)?;
    let attack_name = sweep.attack.map(|k| k.as_str()).unwrap_or("none");
    for row in &rows {
        let rec = row.report.final_record();
        let structured = row.method == Method::Rgsla;
        let opt = |v: f64| if structured { v.to_string() } else { String::new() };
        let rate = sweep.rates[row.rate_idx];
        write_record(
            &mut w,
            &path,
            [
                row.method.as_str().to_string(),
                attack_name.to_string(),
                rate.to_string(),
                row.seed.to_string(),
                row.report.test_accuracy.to_string(),
                rec.l_gnn.to_string(),
                opt(rec.l_ss),
                opt(rec.l_align),
                if sweep.timing {
                    wall_ms(row.report.wall_time)
                } else {
                    String::new()
                },
            ],
        )?;
    }
    finish_csv(w, &path)?;

    if sweep.save_adjacency {
        create_dir(&sweep.out.join("adjacency"))?;
        for row in rows.iter().filter(|r| r.method == Method::Rgsla) {
            let file = adjacency_file(&sweep.out, row.method, sweep.rates[row.rate_idx], row.seed);
            write_weighted_edges(&row.report.final_adjacency.view(), &file)?;
        }
        for cell in &done {
            write_graph_dir(
                &cell.graph,
                &graph_dir(&sweep.out, sweep.rates[cell.rate_idx], cell.seed),
            )?;
        }
    }
    Ok(())
}
