use std::path::Path;
use std::process::{Command, Output};

use spatree::trees::RoutingTree;
use spatree::PointSet;

fn spatree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatree"))
        .args(args)
        .env_remove("SPATREE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (path, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        let out = spatree(&["synth", "sinusoid", "--n", "300", "--D", "10", "--seed", seed, "-o", path_str(path)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let (a, b, c) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), std::fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn synth_rejects_odd_sinusoid_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let out = spatree(&["synth", "sinusoid", "--n", "10", "--D", "7", "-o", path_str(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn unknown_subcommand_and_bad_workers_exit_2() {
    assert_eq!(spatree(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(spatree(&["--workers", "0", "synth", "affine"]).status.code(), Some(2));
}

#[test]
fn dimest_writes_one_block_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("affine.csv");
    let out = spatree(&["synth", "affine", "--n", "400", "--D", "6", "--d", "2", "-o", path_str(&data)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = dir.path().join("dim.csv");
    let out = spatree(&[
        "dimest", path_str(&data), "--epsilon", "0.1", "0.01", "--num-radii", "5", "--centers", "50", "-o", path_str(&csv),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,d_mean,d_std,n_mean,epsilon"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|l| l.ends_with(",0.1")).count(), 5);
    assert_eq!(rows.iter().filter(|l| l.ends_with(",0.01")).count(), 5);
}

#[test]
fn dimest_on_a_single_point_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("one.csv");
    std::fs::write(&data, "1.0,2.0\n").unwrap();
    let out = spatree(&["dimest", path_str(&data), "-o", path_str(&dir.path().join("d.csv"))]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn build_writes_a_routable_tree_and_prints_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("s.csv");
    assert!(spatree(&["synth", "swissroll", "--n", "500", "-o", path_str(&data)]).status.success());
    let tree_path = dir.path().join("t.jsonl");
    let out = spatree(&["build", path_str(&data), "--rule", "pd", "--min-size", "5", "-o", path_str(&tree_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("level,max_diam_sq,avg_diam_sq,cells,dist_splits\n0,"));

    let points = PointSet::load(&data).unwrap();
    let tree = RoutingTree::load(&tree_path, points.dim()).unwrap();
    assert_eq!(tree.member_count(0), 500);
    let leaf = tree.route(points.point(0), usize::MAX);
    assert!(tree.member_count(leaf) <= 5);
}

#[test]
fn build_rejects_an_unknown_rule() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("a.csv");
    assert!(spatree(&["synth", "affine", "--n", "50", "-o", path_str(&data)]).status.success());
    let out = spatree(&["build", path_str(&data), "--rule", "octree", "-o", path_str(&dir.path().join("t.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_reports_under_the_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{
  "version": 1,
  "dataset": { "generator": "sinusoid", "n": 300, "dims": [10] },
  "trees": [{ "rule": "kd", "min_size": 5 }, { "rule": "2m", "min_size": 5 }],
  "tasks": ["profile", "quantize", "nn"],
  "folds": 3,
  "max_level": 4,
  "slope_window": [1, 3],
  "seed": 1
}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let out = spatree(&["--workers", "2", "--output-dir", path_str(&out_dir), "run", path_str(&cfg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["profile.csv", "eval.csv", "slopes.csv", "report.json"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let eval = std::fs::read_to_string(out_dir.join("eval.csv")).unwrap();
    assert!(eval.lines().any(|l| l.starts_with("nn_ratio,kd,")));
}

#[test]
fn run_reports_schema_errors_with_their_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{ "version": 1, "dataset": { "generator": "sinusoid", "n": 100, "dims": [10] },
             "trees": [{ "rule": "kd", "colour": "red" }], "tasks": ["profile"] }"#,
    )
    .unwrap();
    let out = spatree(&["--output-dir", path_str(dir.path()), "run", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("trees[0].colour"), "{}", stderr(&out));
}

#[test]
fn run_with_missing_dataset_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("csv.json");
    std::fs::write(
        &cfg,
        r#"{ "version": 1, "dataset": { "generator": "csv", "path": "/nonexistent/data.csv" },
             "trees": [{ "rule": "kd" }], "tasks": ["profile"] }"#,
    )
    .unwrap();
    let out = spatree(&["--output-dir", path_str(dir.path()), "run", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn output_dir_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spatree"))
        .args(["synth", "affine", "--n", "20"])
        .env("SPATREE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("affine.csv").exists());
}
