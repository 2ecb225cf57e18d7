//! Local covariance dimension as a function of ball radius. Small balls on the
//! noisy swiss roll look close to the 2-d sheet at the loose tolerance, larger
//! ones pick up the roll's curvature and fill out all three axes.
//!
//! cargo run --release --example dimension_profile

use spatree::covdim::{dimension_profiles, local_dim_at, ProfileConfig};
use spatree::synth::noisy_swissroll;

fn main() -> spatree::Result<()> {
    let data = noisy_swissroll(5000, 0.5, 2)?;
    let config = ProfileConfig {
        num_radii: 12,
        epsilons: vec![0.1, 0.01],
        center_cap: 300,
    };
    let profiles = dimension_profiles(&data, &config, 9)?;
    println!("diameter {:.2}, {} centers", profiles[0].diameter, profiles[0].centers);
    println!("{:>8} {:>9} {:>9} {:>9}", "r", "n(r)", "d(0.1)", "d(0.01)");
    for (a, b) in profiles[0].records.iter().zip(&profiles[1].records) {
        let show = |d: Option<f64>| d.map_or("-".to_string(), |d| format!("{d:.2}"));
        println!("{:>8.2} {:>9.1} {:>9} {:>9}", a.r, a.n_mean, show(a.d_mean), show(b.d_mean));
    }

    let center = data.point(0).to_vec();
    let local = local_dim_at(&data, &center, 4.0, 0.1)?;
    println!("\nball of radius 4 around point 0: {} points, d = {:?}", local.count, local.dim);

    let mut csv = Vec::new();
    spatree::covdim::write_profiles_csv(&profiles, &mut csv).expect("in-memory write");
    println!("csv is {} bytes", csv.len());
    Ok(())
}
