//! Builds every tree type on the same data and compares how quickly the
//! average cell diameter falls with depth.
//!
//! cargo run --release --example build_trees

use spatree::harness::level_profile;
use spatree::synth::sinusoid_manifold;
use spatree::trees::{BuildConfig, PartitionTree, SplitRule};

fn main() -> spatree::Result<()> {
    let data = sinusoid_manifold(4000, 30, 3)?;
    let rules: Vec<SplitRule> = SplitRule::ALL_NAMES.iter().map(|n| n.parse().unwrap()).collect();

    let mut rows = Vec::new();
    for rule in &rules {
        let config = BuildConfig::new(*rule).with_min_size(5).with_seed(11);
        let tree = PartitionTree::build(&data, &config)?;
        let profile = level_profile(&tree);
        let dist: usize = profile.levels.iter().map(|l| l.dist_splits).sum();
        println!(
            "{:<7} nodes {:>5}  height {:>3}  distance splits {:>3}",
            rule.name(),
            tree.nodes().len(),
            tree.height(),
            dist
        );
        rows.push((rule.name(), profile));
    }

    println!("\nrelative avg diam^2 by level");
    print!("{:>5}", "level");
    for (name, _) in &rows {
        print!("{name:>9}");
    }
    println!();
    for level in 0..=8 {
        print!("{level:>5}");
        for (_, p) in &rows {
            print!("{:>9.4}", p.at(level).avg_diam_sq / p.at(0).avg_diam_sq);
        }
        println!();
    }

    let pd = PartitionTree::build(&data, &BuildConfig::new(SplitRule::Pd).with_min_size(5))?;
    let leaf = pd.route(data.point(17), usize::MAX);
    println!("\npoint 17 lands in PD leaf {leaf} with {} points", pd.node(leaf).members.len());
    Ok(())
}
