//! Splitting rules. Each takes the member indices of a cell (sorted
//! ascending) and returns the two children, also sorted, or `None` when the
//! cell cannot be split and must become a leaf.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::diameters::decrease_from_means;
use crate::linalg::{dist_sq, dot, mean, principal_direction, sample_sphere, total_variance};

/// How a cell was cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitRecord {
    /// Left child is the closed ball `‖x − center‖ ≤ radius`.
    Distance { center: Vec<f64>, radius: f64 },
    /// Left child is the halfspace `x · direction ≤ threshold`. `axis` is set
    /// for coordinate-aligned cuts.
    Projection {
        direction: Vec<f64>,
        threshold: f64,
        axis: Option<usize>,
    },
}

impl SplitRecord {
    /// The statistic a point is compared against the threshold with.
    #[inline]
    pub fn statistic(&self, q: &[f64]) -> f64 {
        match self {
            SplitRecord::Distance { center, .. } => dist_sq(q, center).sqrt(),
            SplitRecord::Projection { axis: Some(j), .. } => q[*j],
            SplitRecord::Projection { direction, .. } => dot(q, direction),
        }
    }

    #[inline]
    pub fn goes_left(&self, q: &[f64]) -> bool {
        let s = self.statistic(q);
        match self {
            SplitRecord::Distance { radius, .. } => s <= *radius,
            SplitRecord::Projection { threshold, .. } => s <= *threshold,
        }
    }

    pub fn is_distance(&self) -> bool {
        matches!(self, SplitRecord::Distance { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub record: SplitRecord,
}

/// Axis-aligned box carried by dyadic cells. `halvings` counts every
/// midpoint cut applied on the way from the root, including cuts that left
/// one side empty; the next cut is along coordinate `halvings mod D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub halvings: usize,
}

impl BoundingBox {
    /// Tight box around the given points.
    pub fn around(points: &PointSet, members: &[usize]) -> Self {
        let dim = points.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in members {
            for (j, x) in points.point(i).iter().enumerate() {
                lo[j] = lo[j].min(*x);
                hi[j] = hi[j].max(*x);
            }
        }
        BoundingBox { lo, hi, halvings: 0 }
    }

    pub fn diag_sq(&self) -> f64 {
        dist_sq(&self.lo, &self.hi)
    }
}

/// Balanced split on a per-member statistic: the `⌈m/2⌉` smallest values go
/// left, ties broken by point index. The threshold sits strictly below every
/// right-side value unless a value is duplicated across the boundary.
pub(crate) fn rank_median_split(members: &[usize], values: &[f64]) -> (Vec<usize>, Vec<usize>, f64) {
    debug_assert_eq!(members.len(), values.len());
    let m = members.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(members[a].cmp(&members[b])));
    let k = m.div_ceil(2);
    let mut left: Vec<usize> = order[..k].iter().map(|&o| members[o]).collect();
    let mut right: Vec<usize> = order[k..].iter().map(|&o| members[o]).collect();
    left.sort_unstable();
    right.sort_unstable();
    let a = values[order[k - 1]];
    let threshold = match order.get(k) {
        Some(&o) => {
            let b = values[o];
            let t = a + (b - a) / 2.0;
            if t >= b {
                a
            } else {
                t
            }
        }
        None => a,
    };
    (left, right, threshold)
}

fn project(points: &PointSet, members: &[usize], direction: &[f64]) -> Vec<f64> {
    members.iter().map(|&i| dot(points.point(i), direction)).collect()
}

fn all_identical(points: &PointSet, members: &[usize]) -> bool {
    let first = points.point(members[0]);
    members[1..].iter().all(|&i| points.point(i) == first)
}

/// Midpoint cut of the cell's box along the next coordinate in the cycle.
/// A cut that would leave one side empty shrinks the box to the occupied half
/// and moves on to the next coordinate, so the returned split is always
/// proper. Returns the children's boxes alongside the split.
pub fn split_dyadic(
    points: &PointSet,
    members: &[usize],
    bbox: &BoundingBox,
) -> Option<(Split, BoundingBox, BoundingBox)> {
    if members.len() < 2 || all_identical(points, members) {
        return None;
    }
    let dim = points.dim();
    let mut b = bbox.clone();
    // Enough halvings to exhaust the f64 exponent range on every axis.
    let cap = 1100 * dim;
    for _ in 0..cap {
        let j = b.halvings % dim;
        let mid = b.lo[j] + (b.hi[j] - b.lo[j]) / 2.0;
        let (left, right): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&i| points.point(i)[j] <= mid);
        b.halvings += 1;
        if left.is_empty() {
            b.lo[j] = mid;
            continue;
        }
        if right.is_empty() {
            b.hi[j] = mid;
            continue;
        }
        let mut left_box = b.clone();
        left_box.hi[j] = mid;
        let mut right_box = b;
        right_box.lo[j] = mid;
        let mut direction = vec![0.0; dim];
        direction[j] = 1.0;
        let split = Split {
            left,
            right,
            record: SplitRecord::Projection {
                direction,
                threshold: mid,
                axis: Some(j),
            },
        };
        return Some((split, left_box, right_box));
    }
    None
}

/// Median cut along the coordinate with the largest spread (`max − min`),
/// lowest coordinate index on ties.
pub fn split_kd(points: &PointSet, members: &[usize]) -> Option<Split> {
    if members.len() < 2 {
        return None;
    }
    let dim = points.dim();
    let first = points.point(members[0]);
    let mut lo = first.to_vec();
    let mut hi = first.to_vec();
    for &i in &members[1..] {
        for (j, x) in points.point(i).iter().enumerate() {
            lo[j] = lo[j].min(*x);
            hi[j] = hi[j].max(*x);
        }
    }
    let (axis, spread) = (0..dim)
        .map(|j| (j, hi[j] - lo[j]))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if !(spread > 0.0) {
        return None;
    }
    let values: Vec<f64> = members.iter().map(|&i| points.point(i)[axis]).collect();
    let (left, right, threshold) = rank_median_split(members, &values);
    let mut direction = vec![0.0; dim];
    direction[axis] = 1.0;
    Some(Split {
        left,
        right,
        record: SplitRecord::Projection {
            direction,
            threshold,
            axis: Some(axis),
        },
    })
}

fn side_decrease(points: &PointSet, members: &[usize], left: &[usize], right: &[usize]) -> f64 {
    let m = members.len() as f64;
    let ml = mean(&points.rows(left)).expect("nonempty side");
    let mr = mean(&points.rows(right)).expect("nonempty side");
    decrease_from_means(left.len() as f64 / m, right.len() as f64 / m, &ml, &mr)
}

/// Median cut along the best of `bag_size` random directions, scored by the
/// drop in average diameter. The first-drawn direction wins ties.
pub fn split_rp<R: Rng + ?Sized>(
    points: &PointSet,
    members: &[usize],
    bag_size: usize,
    rng: &mut R,
) -> Option<Split> {
    if members.len() < 2 || all_identical(points, members) {
        return None;
    }
    let mut best: Option<(f64, Split)> = None;
    for _ in 0..bag_size.max(1) {
        let direction = sample_sphere(points.dim(), rng);
        let values = project(points, members, &direction);
        let (left, right, threshold) = rank_median_split(members, &values);
        let score = side_decrease(points, members, &left, &right);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((
                score,
                Split {
                    left,
                    right,
                    record: SplitRecord::Projection {
                        direction,
                        threshold,
                        axis: None,
                    },
                },
            ));
        }
    }
    best.filter(|(s, _)| *s > 0.0).map(|(_, split)| split)
}

/// Median cut along the principal eigenvector of the cell covariance.
pub fn split_pd(points: &PointSet, members: &[usize]) -> Option<Split> {
    if members.len() < 2 {
        return None;
    }
    let direction = principal_direction(&points.rows(members)).ok()?;
    let values = project(points, members, &direction);
    let (left, right, threshold) = rank_median_split(members, &values);
    Some(Split {
        left,
        right,
        record: SplitRecord::Projection {
            direction,
            threshold,
            axis: None,
        },
    })
}

/// Within-cluster sum of squares of a bipartition; equals `(m/2) Δ_a²(𝐀)`.
pub fn two_means_cost(points: &PointSet, left: &[usize], right: &[usize]) -> f64 {
    [left, right]
        .iter()
        .filter(|side| !side.is_empty())
        .map(|side| total_variance(&points.rows(side)).expect("nonempty") * side.len() as f64)
        .sum()
}

fn pick_distinct_pair<R: Rng + ?Sized>(points: &PointSet, members: &[usize], rng: &mut R) -> Option<(usize, usize)> {
    let m = members.len();
    for _ in 0..64 {
        let a = rng.random_range(0..m);
        let b = rng.random_range(0..m);
        if a != b && points.point(members[a]) != points.point(members[b]) {
            return Some((members[a], members[b]));
        }
    }
    let a = members[rng.random_range(0..m)];
    members
        .iter()
        .find(|&&b| points.point(b) != points.point(a))
        .map(|&b| (a, b))
}

/// Lloyd iterations from two seed points. Returns the final centroids, or
/// `None` if a cluster empties out.
fn lloyd(points: &PointSet, members: &[usize], seeds: (usize, usize), max_iters: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let dim = points.dim();
    let mut c1 = points.point(seeds.0).to_vec();
    let mut c2 = points.point(seeds.1).to_vec();
    let mut in_second = vec![false; members.len()];
    for iter in 0..max_iters {
        let mut changed = false;
        for (slot, &i) in in_second.iter_mut().zip(members) {
            let p = points.point(i);
            let second = dist_sq(p, &c2) < dist_sq(p, &c1);
            changed |= second != *slot;
            *slot = second;
        }
        if iter > 0 && !changed {
            break;
        }
        let mut s1 = vec![0.0; dim];
        let mut s2 = vec![0.0; dim];
        let (mut n1, mut n2) = (0usize, 0usize);
        for (&second, &i) in in_second.iter().zip(members) {
            let (s, n) = if second { (&mut s2, &mut n2) } else { (&mut s1, &mut n1) };
            s.iter_mut().zip(points.point(i)).for_each(|(a, x)| *a += x);
            *n += 1;
        }
        if n1 == 0 || n2 == 0 {
            return None;
        }
        c1 = s1.into_iter().map(|v| v / n1 as f64).collect();
        c2 = s2.into_iter().map(|v| v / n2 as f64).collect();
    }
    Some((c1, c2))
}

/// 2-means cut: Lloyd's algorithm with `restarts` random seedings, keeping
/// the run with the lowest cost. The children are the two sides of the
/// bisecting hyperplane of the final centroids, which is the cluster
/// assignment at a Lloyd fixpoint.
pub fn split_two_means<R: Rng + ?Sized>(
    points: &PointSet,
    members: &[usize],
    restarts: usize,
    max_iters: usize,
    rng: &mut R,
) -> Option<Split> {
    if members.len() < 2 {
        return None;
    }
    let mut best: Option<(f64, Split)> = None;
    for _ in 0..restarts.max(1) {
        let seeds = pick_distinct_pair(points, members, rng)?;
        let Some((c1, c2)) = lloyd(points, members, seeds, max_iters.max(1)) else {
            continue;
        };
        let mut direction: Vec<f64> = c2.iter().zip(&c1).map(|(a, b)| a - b).collect();
        let norm = dot(&direction, &direction).sqrt();
        if !(norm > 0.0) {
            continue;
        }
        direction.iter_mut().for_each(|x| *x /= norm);
        let midpoint: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| (a + b) / 2.0).collect();
        let threshold = dot(&direction, &midpoint);
        let (left, right): (Vec<usize>, Vec<usize>) = members
            .iter()
            .partition(|&&i| dot(points.point(i), &direction) <= threshold);
        if left.is_empty() || right.is_empty() {
            continue;
        }
        let cost = two_means_cost(points, &left, &right);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((
                cost,
                Split {
                    left,
                    right,
                    record: SplitRecord::Projection {
                        direction,
                        threshold,
                        axis: None,
                    },
                },
            ));
        }
    }
    best.map(|(_, s)| s)
}

/// Outlier-removing cut: median of the distance to the cell mean.
pub fn split_distance(points: &PointSet, members: &[usize]) -> Option<Split> {
    if members.len() < 2 {
        return None;
    }
    let center = mean(&points.rows(members)).ok()?;
    let values: Vec<f64> = members.iter().map(|&i| dist_sq(points.point(i), &center).sqrt()).collect();
    let (left, right, radius) = rank_median_split(members, &values);
    Some(Split {
        left,
        right,
        record: SplitRecord::Distance { center, radius },
    })
}
