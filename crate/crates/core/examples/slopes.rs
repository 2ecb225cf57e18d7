//! Fits the rate at which each tree shrinks cell diameters, across ambient
//! dimensions, alongside the level at which the dyadic tree halves the root
//! diameter.
//!
//! cargo run --release --example slopes

use spatree::harness::{fit_slope, halving_level, level_profile};
use spatree::synth::sinusoid_manifold;
use spatree::trees::{BuildConfig, PartitionTree, SplitRule};

fn main() -> spatree::Result<()> {
    let (l0, l1) = (3, 8);
    println!("slope of log2 avg diameter over levels {l0}..={l1}");
    println!("{:>4} {:>9} {:>9} {:>9} {:>9} {:>9}   dyadic halving level", "D", "dyadic", "kd", "rp", "pd", "2m");
    for dim in [10, 30, 50] {
        let data = sinusoid_manifold(3000, dim, 5)?;
        print!("{dim:>4}");
        let mut halving = None;
        for name in SplitRule::ALL_NAMES {
            let rule: SplitRule = name.parse()?;
            let tree = PartitionTree::build(&data, &BuildConfig::new(rule).with_seed(1))?;
            let profile = level_profile(&tree);
            print!(" {:>9.3}", fit_slope(&profile, l0, l1)?);
            if rule == SplitRule::Dyadic {
                halving = halving_level(&profile);
            }
        }
        println!("   {}", halving.map_or("-".into(), |h| h.to_string()));
    }
    Ok(())
}
