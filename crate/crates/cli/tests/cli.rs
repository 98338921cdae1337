//! The `rgsla` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use ndarray::{array, Array2};

use rgsla_core::graph::io::{read_graph_dir, write_graph_dir, EDGES};
use rgsla_core::graph::Graph;

fn rgsla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgsla")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = rgsla(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn cycle4(dir: &Path) {
    let a = array![
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
    ];
    let x = Array2::from_shape_fn((4, 3), |(_, k)| if k == 0 { 2.0 } else { 0.0 });
    let g = Graph::new(
        x,
        a,
        vec![0, 1, 0, 1],
        2,
        vec![true, true, false, false],
        vec![false, false, true, true],
    )
    .unwrap();
    write_graph_dir(&g, dir).unwrap();
}

#[test]
fn train_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g");
    ok(&[
        "gen",
        "--out",
        p(&graph),
        "--sizes",
        "6,6",
        "--p-in",
        "0.5",
        "--dim",
        "3",
        "--train-frac",
        "0.3",
    ]);
    let out = dir.path().join("t");
    ok(&[
        "train",
        "--data",
        p(&graph),
        "--out",
        p(&out),
        "--attack",
        "random_flip",
        "--rates",
        "0,0.05,0.1,0.15,0.2",
        "--repeat",
        "10",
        "--set",
        "outer_iters=2",
    ]);
    let (header, rows) = csv_rows(&out.join("results.csv"));
    assert_eq!(
        header,
        ["method", "attack", "rate", "seed", "accuracy", "l_gnn", "l_ss", "l_align", "wall_ms"]
    );
    assert_eq!(rows.len(), 100);
    for row in &rows {
        assert!(row[8].is_empty());
        assert_eq!(row[6].is_empty(), row[0] == "plain_gcn");
    }
    // methods, then rates, then seeds
    assert_eq!(rows[0][..4], ["plain_gcn", "random_flip", "0", "0"]);
    assert_eq!(rows[99][..4], ["rgsla", "random_flip", "0.2", "9"]);
}

#[test]
fn train_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.toml");
    std::fs::write(
        &plan,
        "[train]\nout = \"out\"\nattack = \"feature_difference\"\nrates = [0.0, 0.1]\nrepeat = 3\n\
         [train.synthetic]\nsizes = [8, 8]\ndim = 4\n[train.config]\nouter_iters = 4\ntheta1 = 0.001\ntheta2 = 0.0001\ntheta3 = 0.001\n",
    )
    .unwrap();
    ok(&["train", "--plan", p(&plan)]);
    let first = std::fs::read(dir.path().join("out/results.csv")).unwrap();
    ok(&["train", "--plan", p(&plan)]);
    assert_eq!(first, std::fs::read(dir.path().join("out/results.csv")).unwrap());
}

#[test]
fn plain_gcn_is_accurate_on_clean_separable_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.toml");
    std::fs::write(
        &plan,
        "[train]\nout = \"out\"\nmethods = [\"plain_gcn\"]\nrepeat = 5\n\
         [train.synthetic]\nsizes = [20, 20]\np_in = 0.3\np_out = 0.0\nseparation = 3.0\n",
    )
    .unwrap();
    ok(&["train", "--plan", p(&plan)]);
    let (_, rows) = csv_rows(&dir.path().join("out/results.csv"));
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!(row[4].parse::<f64>().unwrap() >= 0.9, "{row:?}");
    }
}

#[test]
fn timing_fills_wall_ms() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g");
    ok(&[
        "gen",
        "--out",
        p(&graph),
        "--sizes",
        "5,5",
        "--dim",
        "2",
        "--train-frac",
        "0.3",
    ]);
    let out = dir.path().join("t");
    ok(&[
        "train",
        "--data",
        p(&graph),
        "--out",
        p(&out),
        "--timing",
        "--set",
        "outer_iters=1",
    ]);
    let (_, rows) = csv_rows(&out.join("results.csv"));
    assert!(rows.iter().all(|r| r[8].parse::<f64>().is_ok()));
}

#[test]
fn attack_respects_budget_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g");
    ok(&["gen", "--out", p(&graph)]);
    let clean = read_graph_dir(&graph).unwrap();

    let same = dir.path().join("same");
    ok(&[
        "attack",
        "--data",
        p(&graph),
        "--out",
        p(&same),
        "--kind",
        "random_flip",
        "--rate",
        "0",
    ]);
    assert_eq!(
        std::fs::read(graph.join(EDGES)).unwrap(),
        std::fs::read(same.join(EDGES)).unwrap()
    );

    for kind in ["random_flip", "feature_difference"] {
        let out = dir.path().join(kind);
        ok(&[
            "attack",
            "--data",
            p(&graph),
            "--out",
            p(&out),
            "--kind",
            kind,
            "--rate",
            "0.15",
            "--seed",
            "4",
        ]);
        let manifest = std::fs::read_to_string(out.join("attack_manifest.tsv")).unwrap();
        let budget = (0.15 * clean.num_edges() as f64 + 1e-9).floor() as usize;
        assert!(manifest.contains(&format!("kind\t{kind}\n")));
        assert!(manifest.contains(&format!("pairs_changed\t{budget}\n")), "{manifest}");
        let poisoned = read_graph_dir(&out).unwrap();
        poisoned.validate().unwrap();
        assert_eq!(poisoned.features, clean.features);
        assert_eq!(poisoned.labels, clean.labels);
    }
}

#[test]
fn homophily_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let x = Array2::zeros((4, 1));
    let mut a = Array2::zeros((4, 4));
    for (i, j) in [(0, 1), (1, 2), (2, 3)] {
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    let mask = vec![true, false, false, false];
    let test = vec![false, true, true, true];
    let same = dir.path().join("same");
    write_graph_dir(
        &Graph::new(x.clone(), a, vec![0; 4], 1, mask.clone(), test.clone()).unwrap(),
        &same,
    )
    .unwrap();
    let out = dir.path().join("h1");
    ok(&["homophily", "--data", p(&same), "--out", p(&out)]);
    let (header, rows) = csv_rows(&out.join("homophily.csv"));
    assert_eq!(header, ["node", "r_raw", "r_learned"]);
    assert!(rows.iter().all(|r| r[1] == "1" && r[2].is_empty()));
    let (_, hist) = csv_rows(&out.join("homophily_hist.csv"));
    assert_eq!(hist.len(), 10);
    assert_eq!(hist[9][2], "4");
    assert!(hist[..9].iter().all(|r| r[2] == "0"));

    let empty = dir.path().join("empty");
    let g = Graph::new(x, Array2::zeros((4, 4)), vec![0, 1, 0, 1], 2, mask, test).unwrap();
    write_graph_dir(&g, &empty).unwrap();
    let out = dir.path().join("h2");
    ok(&["homophily", "--data", p(&empty), "--out", p(&out)]);
    let (_, rows) = csv_rows(&out.join("homophily.csv"));
    assert!(rows.iter().all(|r| r[1] == "0"));
}

#[test]
fn learned_structure_is_more_homophilous_than_poisoned_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g");
    let poisoned = dir.path().join("p");
    let out = dir.path().join("t");
    ok(&["gen", "--out", p(&graph), "--seed", "2"]);
    ok(&[
        "attack",
        "--data",
        p(&graph),
        "--out",
        p(&poisoned),
        "--kind",
        "feature_difference",
        "--rate",
        "0.25",
    ]);
    ok(&[
        "train",
        "--data",
        p(&poisoned),
        "--out",
        p(&out),
        "--methods",
        "rgsla",
        "--save-adjacency",
        "--set",
        "prune={kind=\"knn\",k=4}",
    ]);
    let learned = out.join("adjacency/rgsla_rate0_seed0.tsv");
    let h = dir.path().join("h");
    ok(&[
        "homophily",
        "--data",
        p(&poisoned),
        "--learned",
        p(&learned),
        "--out",
        p(&h),
    ]);
    let (_, rows) = csv_rows(&h.join("homophily.csv"));
    let mean = |col: usize| rows.iter().map(|r| r[col].parse::<f64>().unwrap()).sum::<f64>() / rows.len() as f64;
    assert!(mean(2) > mean(1), "learned {} vs raw {}", mean(2), mean(1));
}

#[test]
fn bound_on_four_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("c4");
    cycle4(&g);
    let csv_path = dir.path().join("bound.csv");
    let stdout = ok(&[
        "bound",
        "--data",
        p(&g),
        "--r",
        "0.5",
        "--d-norm",
        "1.5",
        "--lipschitz",
        "1",
        "--out",
        p(&csv_path),
    ]);
    let value = |key: &str| -> f64 {
        stdout
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key}\t")))
            .unwrap_or_else(|| panic!("{key} missing from {stdout}"))
            .parse()
            .unwrap()
    };
    assert!((value("lower_bound") - 0.9428090415820633).abs() <= 1e-9);
    assert_eq!(value("q"), 2.0);
    assert_eq!(value("B"), 2.0);
    assert!(value("trc_upper_bound") > 0.0);
    let (header, rows) = csv_rows(&csv_path);
    assert_eq!(header, ["quantity", "value"]);
    assert!(rows.iter().any(|r| r[0] == "gap_bound"));

    let zero = ok(&["bound", "--data", p(&g), "--r", "0"]);
    assert!(zero.contains("lower_bound\t0\n"), "{zero}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    assert_eq!(rgsla(&["bound", "--data", p(&missing)]).status.code(), Some(4));

    let graph = dir.path().join("g");
    ok(&[
        "gen",
        "--out",
        p(&graph),
        "--sizes",
        "5,6",
        "--dim",
        "3",
        "--p-in",
        "0.6",
        "--train-frac",
        "0.3",
    ]);
    // an irregular graph without --modal-degree
    assert_eq!(rgsla(&["bound", "--data", p(&graph)]).status.code(), Some(2));
    let out = dir.path().join("t");
    assert_eq!(
        rgsla(&["train", "--data", p(&graph), "--out", p(&out), "--set", "alpha=2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        rgsla(&["train", "--data", p(&graph), "--out", p(&out), "--rates", "0.1"])
            .status
            .code(),
        Some(2)
    );
    let diverge = rgsla(&[
        "train",
        "--data",
        p(&graph),
        "--out",
        p(&out),
        "--set",
        "lr_gcn=1e12",
        "--set",
        "outer_iters=5",
    ]);
    assert_eq!(
        diverge.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&diverge.stderr)
    );

    std::fs::write(graph.join("labels.tsv"), "zero\n").unwrap();
    assert_eq!(
        rgsla(&["homophily", "--data", p(&graph), "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
    let plan = dir.path().join("bad.toml");
    std::fs::write(&plan, "[gen\n").unwrap();
    assert_eq!(rgsla(&["gen", "--plan", p(&plan)]).status.code(), Some(2));
    assert_eq!(
        rgsla(&["gen", "--plan", p(&dir.path().join("nope.toml"))])
            .status
            .code(),
        Some(4)
    );
}
