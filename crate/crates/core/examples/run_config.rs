//! Drives a whole experiment from a JSON run config, the same path the
//! `spatree run` subcommand takes.
//!
//! cargo run --release --example run_config

use spatree::config::RunConfig;
use spatree::harness::run_experiment;

const CONFIG: &str = r#"{
  "version": 1,
  "dataset": { "generator": "sinusoid", "n": 2000, "dims": [20] },
  "trees": [{ "rule": "kd", "min_size": 5 }, { "rule": "rp", "min_size": 5 }, { "rule": "2m", "min_size": 5 }],
  "tasks": ["profile", "quantize", "nn"],
  "folds": 4,
  "max_level": 6,
  "slope_window": [2, 6],
  "seed": 5
}"#;

fn main() -> spatree::Result<()> {
    let mut config = RunConfig::from_json(CONFIG)?;
    config.output_dir = std::env::temp_dir().join("spatree_run_config");
    let report = run_experiment(&config)?;

    for s in &report.slopes {
        println!("{:<4} slope over [{}, {}]: {:?}", s.rule, s.l0, s.l1, s.slope);
    }
    for row in report.eval.iter().filter(|r| r.level == 6) {
        println!("{:<14} {:<4} level {}: {:.4} +- {:.4}", row.task, row.rule, row.level, row.mean, row.std);
    }
    report.write_to(&config.output_dir)?;
    println!("wrote {}", config.output_dir.display());

    // Shipped presets parse the same way.
    let preset = RunConfig::preset("fig5_slopes")?;
    println!("preset fig5_slopes has {} trees", preset.trees.len());
    Ok(())
}
