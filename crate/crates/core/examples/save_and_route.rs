//! Saves a tree as JSON lines and routes queries through the reloaded copy,
//! without the training data.
//!
//! cargo run --release --example save_and_route

use spatree::synth::affine_cloud;
use spatree::trees::{BuildConfig, PartitionTree, RoutingTree, SplitRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = affine_cloud(1000, 8, 2, 6)?;
    let tree = PartitionTree::build(&data, &BuildConfig::new(SplitRule::two_means()).with_min_size(10).with_seed(3))?;

    let path = std::env::temp_dir().join("spatree_tree.jsonl");
    tree.write_jsonl(std::fs::File::create(&path)?)?;
    let routing = RoutingTree::load(&path, data.dim())?;
    println!("saved {} nodes to {}", routing.len(), path.display());

    let mut agree = 0;
    for (i, q) in data.iter().enumerate() {
        for level in [1, 3, usize::MAX] {
            if routing.route(q, level) == tree.route(q, level) {
                agree += 1;
            }
        }
        if i < 3 {
            let leaf = routing.route(q, usize::MAX);
            println!("point {i} -> leaf {leaf} ({} training points)", routing.member_count(leaf));
        }
    }
    println!("{agree} of {} routings agree", 3 * data.len());
    Ok(())
}
