//! Generates the three synthetic families and checks their global covariance
//! dimension against the dimension they were built with.
//!
//! cargo run --release --example synth_datasets

use spatree::covdim::global_cov_dim;
use spatree::synth::{affine_cloud, noisy_swissroll, sinusoid_manifold};

fn main() -> spatree::Result<()> {
    let sets = [
        ("sinusoid D=10", sinusoid_manifold(2000, 10, 1)?),
        ("sinusoid D=30", sinusoid_manifold(2000, 30, 1)?),
        ("swiss roll, sigma=0.5", noisy_swissroll(2000, 0.5, 1)?),
        ("affine d=3 in D=12", affine_cloud(2000, 12, 3, 1)?),
    ];

    println!("{:<24} {:>6} {:>5} {:>10} {:>10}", "dataset", "n", "D", "d(0.1)", "d(0.01)");
    for (name, data) in &sets {
        println!(
            "{:<24} {:>6} {:>5} {:>10} {:>10}",
            name,
            data.len(),
            data.dim(),
            global_cov_dim(data, 0.1)?,
            global_cov_dim(data, 0.01)?
        );
    }

    let path = std::env::temp_dir().join("spatree_affine.csv");
    sets[3].1.save(&path)?;
    let back = spatree::PointSet::load(&path)?;
    println!("\nround-tripped {} points through {}", back.len(), path.display());
    Ok(())
}
