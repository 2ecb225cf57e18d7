#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spatree::diameters::{avg_diam_sq, max_diam_sq, CellView};
use spatree::PointSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_set(rng: &mut ChaCha8Rng, m: usize, dim: usize) -> PointSet {
    let data: Vec<f64> = (0..m * dim).map(|_| rng.sample(StandardNormal)).collect();
    PointSet::new(dim, data).unwrap()
}

/// Ordered-pair mean of squared distances, O(m²).
pub fn brute_avg_diam_sq(points: &PointSet, idx: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in idx {
        for &j in idx {
            s += points
                .point(i)
                .iter()
                .zip(points.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    s / (idx.len() * idx.len()) as f64
}

pub fn cell<'a>(points: &'a PointSet, idx: &[usize], parent_len: usize) -> CellView<'a> {
    CellView::new(points, idx.to_vec(), parent_len).unwrap()
}

/// `Σ_i w_i Δ_a²(A_i)` with weights relative to `m`.
pub fn children_avg(points: &PointSet, left: &[usize], right: &[usize]) -> f64 {
    let m = left.len() + right.len();
    let l = cell(points, left, m);
    let r = cell(points, right, m);
    l.weight * avg_diam_sq(&l).unwrap() + r.weight * avg_diam_sq(&r).unwrap()
}

/// `Σ_i w_i Δ²(A_i)` with weights relative to `m`.
pub fn children_max(points: &PointSet, left: &[usize], right: &[usize]) -> f64 {
    let m = left.len() + right.len();
    let l = cell(points, left, m);
    let r = cell(points, right, m);
    l.weight * max_diam_sq(&l).unwrap() + r.weight * max_diam_sq(&r).unwrap()
}

/// Minimum of `Δ_a²(𝐀)` over every bipartition of `members` into two
/// nonempty sides.
pub fn oracle_min_avg(points: &PointSet, members: &[usize]) -> f64 {
    let m = members.len();
    assert!((2..=20).contains(&m));
    let mut best = f64::INFINITY;
    // Member 0 always sits on the left, so each bipartition is seen once.
    for mask in 0u32..(1 << (m - 1)) {
        let full = mask << 1 | 1;
        if full == (1 << m) - 1 {
            continue;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = (0..m).partition(|&k| full >> k & 1 == 1);
        let l: Vec<usize> = l.iter().map(|&k| members[k]).collect();
        let r: Vec<usize> = r.iter().map(|&k| members[k]).collect();
        best = best.min(children_avg(points, &l, &r));
    }
    best
}
