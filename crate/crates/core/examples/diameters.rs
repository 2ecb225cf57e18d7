//! Cell diameters: the exact pairwise maximum, the O(nD) average, and how
//! much the average drops when a cell is cut in two.
//!
//! cargo run --release --example diameters

use spatree::diameters::{avg_diam_sq, diameter_stats, partition_stats, split_decrease, CellView};
use spatree::synth::noisy_swissroll;

fn main() -> spatree::Result<()> {
    let data = noisy_swissroll(3000, 0.5, 4)?;
    let whole = CellView::whole(&data);
    let stats = diameter_stats(&whole, 4096)?;
    println!("whole set: max diam^2 = {:.2}, avg diam^2 = {:.2}", stats.max_diam_sq, stats.avg_diam_sq);

    // Cut on the height coordinate and on the first roll coordinate.
    for axis in [1usize, 0] {
        let (left, right): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| data.point(i)[axis] <= 0.0);
        let l = CellView::new(&data, left, data.len())?;
        let r = CellView::new(&data, right, data.len())?;
        let dec = split_decrease(&whole, &l, &r)?;
        let (max_sq, avg_sq) = partition_stats(&[l.clone(), r.clone()])?;
        println!(
            "cut x{axis} <= 0: weights {:.2}/{:.2}, decrease {:.2} (avg {:.2} -> {:.2}), weighted max diam^2 {:.2}",
            l.weight,
            r.weight,
            dec,
            stats.avg_diam_sq,
            avg_sq,
            max_sq
        );
        assert!((stats.avg_diam_sq - dec - avg_sq).abs() < 1e-9 * stats.avg_diam_sq);
        println!("  avg diam^2 of the two sides: {:.2}, {:.2}", avg_diam_sq(&l)?, avg_diam_sq(&r)?);
    }

    let approx = diameter_stats(&whole, 100)?;
    println!("\nwith a 100-point exact limit the max is bounded by {:.2} (approximate: {})", approx.max_diam_sq, approx.approximate);
    Ok(())
}
