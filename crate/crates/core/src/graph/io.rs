//! Tab-separated graph directory format.
//!
//! ```text
//! meta.tsv      n<TAB>d<TAB>C
//! features.tsv  n lines of d reals
//! edges.tsv     i<TAB>j per undirected edge, 0-indexed, i < j
//! labels.tsv    n lines, one integer each
//! split.tsv     n lines: train | test | none
//! ```
//!
//! Weighted adjacency matrices (learned structures) use a separate edge-list
//! file of `i<TAB>j<TAB>w` lines over the upper triangle.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};

use super::Graph;
use crate::error::{Error, Result};

pub const META: &str = "meta.tsv";
pub const FEATURES: &str = "features.tsv";
pub const EDGES: &str = "edges.tsv";
pub const LABELS: &str = "labels.tsv";
pub const SPLIT: &str = "split.tsv";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| parse_err(path, line, format!("bad value {s:?}: {e}")))
}

fn expect_count(path: &Path, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(parse_err(path, got, format!("expected {want} lines, found {got}")));
    }
    Ok(())
}

pub fn read_graph_dir(dir: &Path) -> Result<Graph> {
    let meta_path = dir.join(META);
    let meta = read(&meta_path)?;
    let (line, meta_line) = lines(&meta)
        .next()
        .ok_or_else(|| parse_err(&meta_path, 1, "empty meta file"))?;
    let cols: Vec<&str> = meta_line.split('\t').collect();
    if cols.len() != 3 {
        return Err(parse_err(&meta_path, line, "expected n<TAB>d<TAB>C"));
    }
    let n: usize = field(&meta_path, line, cols[0])?;
    let d: usize = field(&meta_path, line, cols[1])?;
    let c: usize = field(&meta_path, line, cols[2])?;

    let feat_path = dir.join(FEATURES);
    let text = read(&feat_path)?;
    let mut features = Array2::<f64>::zeros((n, d));
    let mut rows = 0;
    for (line, l) in lines(&text) {
        if rows >= n {
            return Err(parse_err(&feat_path, line, format!("more than {n} rows")));
        }
        let vals: Vec<&str> = l.split('\t').collect();
        if vals.len() != d {
            return Err(parse_err(
                &feat_path,
                line,
                format!("expected {d} columns, found {}", vals.len()),
            ));
        }
        for (k, v) in vals.iter().enumerate() {
            features[[rows, k]] = field(&feat_path, line, v)?;
        }
        rows += 1;
    }
    expect_count(&feat_path, rows, n)?;

    let edge_path = dir.join(EDGES);
    let text = read(&edge_path)?;
    let mut adjacency = Array2::<f64>::zeros((n, n));
    for (line, l) in lines(&text) {
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 2 {
            return Err(parse_err(&edge_path, line, "expected i<TAB>j"));
        }
        let i: usize = field(&edge_path, line, cols[0])?;
        let j: usize = field(&edge_path, line, cols[1])?;
        if i >= j || j >= n {
            return Err(parse_err(
                &edge_path,
                line,
                format!("edge ({i}, {j}) must satisfy i < j < {n}"),
            ));
        }
        adjacency[[i, j]] = 1.0;
        adjacency[[j, i]] = 1.0;
    }

    let label_path = dir.join(LABELS);
    let text = read(&label_path)?;
    let labels = lines(&text)
        .map(|(line, l)| field::<usize>(&label_path, line, l))
        .collect::<Result<Vec<_>>>()?;
    expect_count(&label_path, labels.len(), n)?;

    let split_path = dir.join(SPLIT);
    let text = read(&split_path)?;
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(n);
    for (line, l) in lines(&text) {
        let (tr, te) = match l.trim() {
            "train" => (true, false),
            "test" => (false, true),
            "none" => (false, false),
            other => return Err(parse_err(&split_path, line, format!("unknown split {other:?}"))),
        };
        train.push(tr);
        test.push(te);
    }
    expect_count(&split_path, train.len(), n)?;

    Graph::new(features, adjacency, labels, c, train, test)
}

/// Writes the five files, creating `dir` if needed. Reals use Rust's
/// shortest round-trip formatting, so a read-back is exact.
pub fn write_graph_dir(graph: &Graph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let (n, d) = (graph.n(), graph.d());

    write(&dir.join(META), &format!("{n}\t{d}\t{}\n", graph.num_classes))?;

    let mut s = String::new();
    for row in graph.features.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join("\t"));
        s.push('\n');
    }
    write(&dir.join(FEATURES), &s)?;

    let mut s = String::new();
    for (i, j) in graph.edge_list() {
        let _ = writeln!(s, "{i}\t{j}");
    }
    write(&dir.join(EDGES), &s)?;

    let mut s = String::new();
    for y in &graph.labels {
        let _ = writeln!(s, "{y}");
    }
    write(&dir.join(LABELS), &s)?;

    let mut s = String::new();
    for i in 0..n {
        s.push_str(match (graph.train_mask[i], graph.test_mask[i]) {
            (true, _) => "train\n",
            (_, true) => "test\n",
            _ => "none\n",
        });
    }
    write(&dir.join(SPLIT), &s)
}

/// Nonzero upper-triangle entries of a symmetric weighted matrix as
/// `i<TAB>j<TAB>w` lines.
pub fn write_weighted_edges(w: &ArrayView2<f64>, path: &Path) -> Result<()> {
    let n = w.nrows();
    let mut s = String::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = w[[i, j]];
            if v != 0.0 {
                let _ = writeln!(s, "{i}\t{j}\t{v}");
            }
        }
    }
    write(path, &s)
}

/// Inverse of [`write_weighted_edges`] for an `n`-node graph.
pub fn read_weighted_edges(path: &Path, n: usize) -> Result<Array2<f64>> {
    let text = read(path)?;
    let mut w = Array2::<f64>::zeros((n, n));
    for (line, l) in lines(&text) {
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 3 {
            return Err(parse_err(path, line, "expected i<TAB>j<TAB>w"));
        }
        let i: usize = field(path, line, cols[0])?;
        let j: usize = field(path, line, cols[1])?;
        let v: f64 = field(path, line, cols[2])?;
        if i >= j || j >= n {
            return Err(parse_err(
                path,
                line,
                format!("entry ({i}, {j}) must satisfy i < j < {n}"),
            ));
        }
        if !(v >= 0.0) || !v.is_finite() {
            return Err(parse_err(
                path,
                line,
                format!("weight {v} must be finite and nonnegative"),
            ));
        }
        w[[i, j]] = v;
        w[[j, i]] = v;
    }
    Ok(w)
}

/// Files making up a graph directory, for callers that copy or diff them.
pub fn graph_files(dir: &Path) -> [PathBuf; 5] {
    [META, FEATURES, EDGES, LABELS, SPLIT].map(|f| dir.join(f))
}
