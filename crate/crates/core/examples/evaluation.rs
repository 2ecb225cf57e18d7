//! Cross-validated vector quantization, approximate nearest neighbor search
//! and cell-average regression at a few tree depths.
//!
//! cargo run --release --example evaluation

use spatree::harness::{kfold, nn_query, quantization_error, regression_eval};
use spatree::synth::sinusoid_manifold;
use spatree::trees::{BuildConfig, PartitionTree, SplitRule};
use spatree::PointSet;

fn main() -> spatree::Result<()> {
    let x = sinusoid_manifold(3000, 20, 8)?;
    let y: Vec<f64> = x.iter().map(|p| p[0].sin() + 0.5 * p[1]).collect();
    let data = x.with_responses(y)?;
    let folds = kfold(data.len(), 5, 3)?;

    for rule in [SplitRule::Kd, SplitRule::rp(), SplitRule::Pd] {
        println!("{rule}");
        println!("  {:>5} {:>10} {:>10} {:>10} {:>10}", "level", "quant", "nn pct", "nn ratio", "rmse");
        for level in [2, 4, 6, 8] {
            let (mut q, mut pct, mut ratio, mut rmse) = (0.0, 0.0, 0.0, 0.0);
            for fold in &folds {
                let train = data.subset(&fold.train)?;
                let test = data.subset(&fold.test)?;
                let tree = PartitionTree::build(&train, &BuildConfig::new(rule).with_seed(2))?;
                q += quantization_error(&tree, &test, level)?;
                rmse += regression_eval(&tree, &test, level)?;
                let (p, r) = nn_scores(&tree, &test, level);
                pct += p;
                ratio += r;
            }
            let k = folds.len() as f64;
            println!("  {:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", level, q / k, pct / k, ratio / k, rmse / k);
        }
    }
    Ok(())
}

fn nn_scores(tree: &PartitionTree<'_>, test: &PointSet, level: usize) -> (f64, f64) {
    let mut pct = 0.0;
    let mut ratio = 0.0;
    for q in test.iter() {
        let res = nn_query(tree, q, level);
        pct += res.percentile;
        ratio += res.ratio;
    }
    (pct / test.len() as f64, ratio / test.len() as f64)
}
