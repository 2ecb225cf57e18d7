//! Evaluation of built trees: per-level diameter profiles, slope fits,
//! vector quantization, near-neighbor search, regression and k-fold splits.

mod experiment;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::error::{Error, Result};
use crate::linalg::dist_sq;
use crate::trees::PartitionTree;

pub use experiment::{run_experiment, DimestRow, EvalRow, ExperimentReport, ProfileRow, SlopeRow};

/// Diameter statistics of one level partition. Both diameters are
/// mass-weighted averages over the cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub max_diam_sq: f64,
    pub avg_diam_sq: f64,
    pub cells: usize,
    pub min_cell: usize,
    pub max_cell: usize,
    /// Cells of this level that were cut by a distance split.
    pub dist_splits: usize,
    /// Some cell used the upper bound for its maximum diameter.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub levels: Vec<LevelStats>,
}

impl LevelProfile {
    /// Statistics at `level`; levels past the tree height repeat the leaf
    /// partition.
    pub fn at(&self, level: usize) -> &LevelStats {
        &self.levels[level.min(self.levels.len() - 1)]
    }
}

/// Level statistics for every level from the root to the deepest leaf.
pub fn level_profile(tree: &PartitionTree<'_>) -> LevelProfile {
    let n = tree.points().len() as f64;
    let levels = (0..=tree.height())
        .map(|level| {
            let ids = tree.level_nodes(level);
            let mut stats = LevelStats {
                level,
                max_diam_sq: 0.0,
                avg_diam_sq: 0.0,
                cells: ids.len(),
                min_cell: usize::MAX,
                max_cell: 0,
                dist_splits: 0,
                approximate: false,
            };
            for id in ids {
                let node = tree.node(id);
                let m = node.members.len();
                stats.max_diam_sq += m as f64 / n * node.stats.max_diam_sq;
                stats.avg_diam_sq += m as f64 / n * node.stats.avg_diam_sq;
                stats.min_cell = stats.min_cell.min(m);
                stats.max_cell = stats.max_cell.max(m);
                stats.approximate |= node.stats.approximate;
                if node.depth == level && node.distance_split {
                    stats.dist_splits += 1;
                }
            }
            stats
        })
        .collect();
    LevelProfile { levels }
}

/// Least-squares slope of `log2 Δ_a(𝐀_l)` against `l` for `l` in
/// `[l0, l1]`. The window stops before the first level whose average
/// diameter is zero.
pub fn fit_slope(profile: &LevelProfile, l0: usize, l1: usize) -> Result<f64> {
    if l1 <= l0 {
        return Err(Error::param(format!("slope window [{l0}, {l1}] is empty")));
    }
    if profile.levels.is_empty() {
        return Err(Error::param("empty level profile"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for l in l0..=l1 {
        let a = profile.at(l).avg_diam_sq;
        if !(a > 0.0) {
            break;
        }
        xs.push(l as f64);
        ys.push(0.5 * a.log2());
    }
    if xs.len() < 2 {
        return Err(Error::param(format!(
            "slope window [{l0}, {l1}] has fewer than two levels with nonzero diameter"
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// First level at which `Δ_a` has halved relative to the root, if any.
pub fn halving_level(profile: &LevelProfile) -> Option<usize> {
    let root = profile.levels.first()?.avg_diam_sq;
    profile
        .levels
        .iter()
        .find(|s| s.avg_diam_sq <= root / 4.0)
        .map(|s| s.level)
}

fn check_dims(tree: &PartitionTree<'_>, test: &PointSet) -> Result<()> {
    if test.dim() != tree.points().dim() {
        return Err(Error::DimensionMismatch {
            expected: tree.points().dim(),
            found: test.dim(),
        });
    }
    Ok(())
}

/// Mean squared distance from each test point to the training centroid of
/// the level-`level` cell it routes to.
pub fn quantization_error(tree: &PartitionTree<'_>, test: &PointSet, level: usize) -> Result<f64> {
    check_dims(tree, test)?;
    if test.is_empty() {
        return Err(Error::EmptyCell("no test points"));
    }
    let total: f64 = test
        .iter()
        .map(|q| dist_sq(q, &tree.node(tree.route(q, level)).mean))
        .sum();
    Ok(total / test.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NNResult {
    /// Rank of the returned neighbor among all training points, over the
    /// training size.
    pub percentile: f64,
    /// Distance to the returned neighbor over the distance to the true
    /// nearest neighbor.
    pub ratio: f64,
    /// Index of the returned training point.
    pub neighbor: usize,
}

/// Closest training point within the routed cell, scored against an
/// exhaustive search.
pub fn nn_query(tree: &PartitionTree<'_>, q: &[f64], level: usize) -> NNResult {
    let train = tree.points();
    let cell = &tree.node(tree.route(q, level)).members;
    let (mut best, mut best_d) = (cell[0], f64::INFINITY);
    for &i in cell {
        let d = dist_sq(train.point(i), q);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    let mut closer = 0usize;
    let mut nearest = f64::INFINITY;
    for p in train.iter() {
        let d = dist_sq(p, q);
        if d < best_d {
            closer += 1;
        }
        nearest = nearest.min(d);
    }
    let ratio = if nearest == 0.0 {
        1.0
    } else {
        (best_d / nearest).sqrt()
    };
    NNResult {
        percentile: (1 + closer) as f64 / train.len() as f64,
        ratio,
        neighbor: best,
    }
}

/// Root-mean-squared error of the cell-average predictor at `level`.
pub fn regression_eval(tree: &PartitionTree<'_>, test: &PointSet, level: usize) -> Result<f64> {
    check_dims(tree, test)?;
    let train_y = tree
        .points()
        .responses()
        .ok_or_else(|| Error::param("training points have no responses"))?;
    let test_y = test
        .responses()
        .ok_or_else(|| Error::param("test points have no responses"))?;
    if test.is_empty() {
        return Err(Error::EmptyCell("no test points"));
    }
    let mut cache: Vec<Option<f64>> = vec![None; tree.nodes().len()];
    let mut sse = 0.0;
    for (q, y) in test.iter().zip(test_y) {
        let id = tree.route(q, level);
        let pred = *cache[id].get_or_insert_with(|| {
            let members = &tree.node(id).members;
            members.iter().map(|&i| train_y[i]).sum::<f64>() / members.len() as f64
        });
        sse += (pred - y).powi(2);
    }
    Ok((sse / test.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded k-fold split. The shuffled indices are cut into `k` contiguous
/// blocks, the first `n % k` of which get one extra element; fold `i` tests
/// on block `i`. Index lists are sorted.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::param(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::param(format!("cannot cut {n} points into {k} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let mut test = perm[start..start + len].to_vec();
        let mut train: Vec<usize> = perm[..start].iter().chain(&perm[start + len..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += len;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{BuildConfig, SplitRule};
    use approx::assert_abs_diff_eq;

    fn line(values: &[f64]) -> PointSet {
        PointSet::new(1, values.to_vec()).unwrap()
    }

    fn kd(p: &PointSet) -> PartitionTree<'_> {
        PartitionTree::build(p, &BuildConfig::new(SplitRule::Kd)).unwrap()
    }

    #[test]
    fn profile_of_four_points() {
        let p = line(&[0.0, 1.0, 2.0, 3.0]);
        let prof = level_profile(&kd(&p));
        let avg: Vec<f64> = prof.levels.iter().map(|s| s.avg_diam_sq).collect();
        assert_eq!(avg.len(), 3);
        assert_abs_diff_eq!(avg[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(avg[1], 0.5, epsilon = 1e-12);
        assert_eq!(avg[2], 0.0);
        assert_eq!(prof.levels[0].max_diam_sq, 9.0);
        assert_eq!(prof.levels[2].max_diam_sq, 0.0);
        assert_eq!((prof.levels[1].min_cell, prof.levels[1].max_cell), (2, 2));
    }

    fn synthetic(values: &[f64]) -> LevelProfile {
        LevelProfile {
            levels: values
                .iter()
                .enumerate()
                .map(|(level, &a)| LevelStats {
                    level,
                    max_diam_sq: a,
                    avg_diam_sq: a,
                    cells: 1,
                    min_cell: 1,
                    max_cell: 1,
                    dist_splits: 0,
                    approximate: false,
                })
                .collect(),
        }
    }

    #[test]
    fn slope_examples() {
        let halving = synthetic(&[64.0, 16.0, 4.0, 1.0]);
        assert_abs_diff_eq!(fit_slope(&halving, 0, 3).unwrap(), -1.0, epsilon = 1e-12);
        let flat = synthetic(&[3.0; 5]);
        assert_abs_diff_eq!(fit_slope(&flat, 0, 4).unwrap(), 0.0, epsilon = 1e-12);
        let zero_tail = synthetic(&[64.0, 16.0, 0.0, 0.0]);
        assert_abs_diff_eq!(fit_slope(&zero_tail, 0, 3).unwrap(), -1.0, epsilon = 1e-12);
        let dead = synthetic(&[64.0, 0.0, 0.0]);
        assert!(fit_slope(&dead, 0, 2).is_err());
        assert!(fit_slope(&halving, 2, 2).is_err());
        // Past the tree height the leaf level repeats.
        assert_abs_diff_eq!(fit_slope(&halving, 3, 6).unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(halving_level(&halving), Some(1));
    }

    #[test]
    fn quantization_examples() {
        let p = line(&[0.0, 1.0, 2.0, 3.0]);
        let t = kd(&p);
        assert_abs_diff_eq!(quantization_error(&t, &p, 0).unwrap(), 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(quantization_error(&t, &p, 1).unwrap(), 0.25, epsilon = 1e-12);
        assert_eq!(quantization_error(&t, &p, 2).unwrap(), 0.0);
        assert_eq!(quantization_error(&t, &line(&[1.5]), 0).unwrap(), 0.0);
    }

    #[test]
    fn nn_examples() {
        let p = line(&[0.0, 1.0, 2.0, 3.0]);
        let t = kd(&p);
        let r = nn_query(&t, &[1.4], 1);
        assert_eq!(r.neighbor, 1);
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.percentile, 0.25);
        for i in 0..4 {
            let r = nn_query(&t, p.point(i), usize::MAX);
            assert_eq!((r.percentile, r.ratio), (0.25, 1.0));
        }
        // Routed to {2,3} although 1 is closer.
        let r = nn_query(&t, &[1.6], 1);
        assert_eq!(r.neighbor, 2);
        assert_eq!(r.percentile, 0.25);
        let r = nn_query(&t, &[1.4], 2);
        assert_eq!(r.neighbor, 1);
        let r = nn_query(&t, &[1.55], 1);
        assert_eq!(r.neighbor, 2);
        assert_abs_diff_eq!(r.ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nn_outside_the_cell() {
        let p = line(&[0.0, 1.0, 2.0, 3.0]);
        let t = kd(&p);
        // 1.6 routes right at level 1 (threshold 1.5) and finds 2, the true NN.
        // At level 2 under {2}, query 1.9 has NN 2 as well; use a query whose
        // routed leaf misses the NN.
        let r = nn_query(&t, &[1.45], 2);
        assert_eq!(r.neighbor, 1);
        let q = [2.6];
        let leaf = t.route(&q, 2);
        assert_eq!(t.node(leaf).members, vec![3]);
        let r = nn_query(&t, &q, 2);
        assert_eq!(r.neighbor, 3);
        assert_abs_diff_eq!(r.ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn regression_examples() {
        let p = line(&[0.0, 1.0, 2.0, 3.0]).with_responses(vec![5.0; 4]).unwrap();
        let t = kd(&p);
        for level in 0..4 {
            assert_eq!(regression_eval(&t, &p, level).unwrap(), 0.0);
        }
        let p = line(&[0.0, 1.0, 2.0, 3.0]).with_responses(vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        let t = kd(&p);
        // Global mean 3: errors 3,1,1,3.
        assert_abs_diff_eq!(regression_eval(&t, &p, 0).unwrap(), 5.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(regression_eval(&t, &p, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert!(regression_eval(&t, &line(&[1.0]), 0).is_err());
    }

    #[test]
    fn kfold_examples() {
        let folds = kfold(10, 10, 3).unwrap();
        assert!(folds.iter().all(|f| f.test.len() == 1 && f.train.len() == 9));
        let sizes: Vec<usize> = kfold(23, 10, 3).unwrap().iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
        let mut all: Vec<usize> = kfold(23, 10, 3).unwrap().into_iter().flat_map(|f| f.test).collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(kfold(5, 10, 0).is_err());
        assert!(kfold(5, 1, 0).is_err());
        assert_eq!(kfold(50, 5, 9).unwrap(), kfold(50, 5, 9).unwrap());
    }
}
