//! Data-diameter statistics for cells and partitions.
//!
//! For a cell `A` holding `m` points:
//!
//! * `Δ²(A)` is the largest squared distance between two of its points;
//! * `Δ_a²(A) = (1/m²) Σ_{x,x'} ‖x − x'‖²` over ordered pairs, which equals
//!   `2 · trace(cov(A))` and is what the cell-splitting identity below needs.
//!
//! For a partition the two quantities are averaged with the empirical mass of
//! each cell as weight. Splitting a cell into `A1`, `A2` lowers the average
//! diameter by exactly `2 μ(A1) μ(A2) ‖mean(A1) − mean(A2)‖²`, with `μ`
//! measured relative to the parent.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, mean, total_variance};

/// Cells above this size get an upper bound on `Δ²` instead of the exact
/// quadratic scan.
pub const DEFAULT_EXACT_DIAMETER_LIMIT: usize = 4096;

const PARALLEL_SCAN_MIN: usize = 1024;

/// A cell: a subset of a point set together with its mass relative to a
/// parent set.
#[derive(Debug, Clone)]
pub struct CellView<'a> {
    pub points: &'a PointSet,
    pub indices: Cow<'a, [usize]>,
    /// `μ(A) = |A| / |parent|`.
    pub weight: f64,
}

impl<'a> CellView<'a> {
    /// Checks that `indices` are nonempty, distinct and in range.
    pub fn new(
        points: &'a PointSet,
        indices: impl Into<Cow<'a, [usize]>>,
        parent_len: usize,
    ) -> Result<Self> {
        let indices = indices.into();
        if indices.is_empty() {
            return Err(Error::EmptyCell("cell has no points"));
        }
        let n = points.len();
        let mut seen = vec![false; n];
        for &i in indices.iter() {
            if i >= n {
                return Err(Error::param(format!("index {i} out of range for {n} points")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::param(format!("index {i} repeated in cell")));
            }
        }
        if parent_len < indices.len() {
            return Err(Error::param("cell is larger than its parent"));
        }
        let weight = indices.len() as f64 / parent_len as f64;
        Ok(CellView {
            points,
            indices,
            weight,
        })
    }

    /// The whole point set as a single cell of weight 1.
    pub fn whole(points: &'a PointSet) -> Self {
        CellView {
            points,
            indices: Cow::Owned((0..points.len()).collect()),
            weight: 1.0,
        }
    }

    pub(crate) fn unchecked(points: &'a PointSet, indices: &'a [usize], weight: f64) -> Self {
        CellView {
            points,
            indices: Cow::Borrowed(indices),
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn rows(&self) -> Vec<&'a [f64]> {
        let points = self.points;
        self.indices.iter().map(|&i| points.point(i)).collect()
    }

    pub fn mean(&self) -> Result<Vec<f64>> {
        mean(&self.rows())
    }
}

/// Per-cell diameter summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterStats {
    pub max_diam_sq: f64,
    pub avg_diam_sq: f64,
    pub count: usize,
    /// `max_diam_sq` is the `(r1 + r2)²` upper bound rather than exact.
    pub approximate: bool,
}

pub(crate) fn exact_max_diam_sq(points: &PointSet, idx: &[usize]) -> f64 {
    let row_max = |a: usize| {
        let pa = points.point(idx[a]);
        idx[a + 1..]
            .iter()
            .map(|&b| dist_sq(pa, points.point(b)))
            .fold(0.0, f64::max)
    };
    if idx.len() >= PARALLEL_SCAN_MIN {
        (0..idx.len()).into_par_iter().map(row_max).reduce(|| 0.0, f64::max)
    } else {
        (0..idx.len()).map(row_max).fold(0.0, f64::max)
    }
}

/// `(r1 + r2)²` where `r1 ≥ r2` are the two largest distances to the mean.
/// Any pair is at most `r1 + r2` apart by the triangle inequality through the
/// mean.
pub(crate) fn max_diam_sq_upper_bound(points: &PointSet, idx: &[usize]) -> f64 {
    let rows = points.rows(idx);
    let mu = mean(&rows).expect("nonempty");
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for p in rows {
        let r = dist_sq(p, &mu).sqrt();
        if r > r1 {
            r2 = r1;
            r1 = r;
        } else if r > r2 {
            r2 = r;
        }
    }
    (r1 + r2).powi(2)
}

pub(crate) fn avg_diam_sq_of(points: &PointSet, idx: &[usize]) -> f64 {
    2.0 * total_variance(&points.rows(idx)).expect("nonempty")
}

/// Exact `Δ²(A)` by scanning all pairs.
pub fn max_diam_sq(cell: &CellView<'_>) -> Result<f64> {
    if cell.is_empty() {
        return Err(Error::EmptyCell("max_diam_sq of empty cell"));
    }
    Ok(exact_max_diam_sq(cell.points, &cell.indices))
}

/// `Δ²(A)`, exact up to `exact_limit` points and the `(r1 + r2)²` upper
/// bound above it. The flag reports which one was returned.
pub fn max_diam_sq_bounded(cell: &CellView<'_>, exact_limit: usize) -> Result<(f64, bool)> {
    if cell.is_empty() {
        return Err(Error::EmptyCell("max_diam_sq of empty cell"));
    }
    if cell.len() > exact_limit {
        Ok((max_diam_sq_upper_bound(cell.points, &cell.indices), true))
    } else {
        Ok((exact_max_diam_sq(cell.points, &cell.indices), false))
    }
}

/// `Δ_a²(A) = 2 · trace(cov(A))`, in `O(mD)`.
pub fn avg_diam_sq(cell: &CellView<'_>) -> Result<f64> {
    if cell.is_empty() {
        return Err(Error::EmptyCell("avg_diam_sq of empty cell"));
    }
    Ok(avg_diam_sq_of(cell.points, &cell.indices))
}

pub fn diameter_stats(cell: &CellView<'_>, exact_limit: usize) -> Result<DiameterStats> {
    let (max_diam_sq, approximate) = max_diam_sq_bounded(cell, exact_limit)?;
    Ok(DiameterStats {
        max_diam_sq,
        avg_diam_sq: avg_diam_sq(cell)?,
        count: cell.len(),
        approximate,
    })
}

/// Mass-weighted `(Δ²(𝐀), Δ_a²(𝐀))` of a partition. Cell weights must sum
/// to one.
pub fn partition_stats(cells: &[CellView<'_>]) -> Result<(f64, f64)> {
    if cells.is_empty() {
        return Err(Error::InvalidPartition("no cells".into()));
    }
    let total: f64 = cells.iter().map(|c| c.weight).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPartition(format!(
            "cell weights sum to {total}, not 1"
        )));
    }
    let mut max_sq = 0.0;
    let mut avg_sq = 0.0;
    for c in cells {
        max_sq += c.weight * max_diam_sq(c)?;
        avg_sq += c.weight * avg_diam_sq(c)?;
    }
    Ok((max_sq, avg_sq))
}

/// `2 w_left w_right ‖mean_left − mean_right‖²`.
#[inline]
pub fn decrease_from_means(w_left: f64, w_right: f64, mean_left: &[f64], mean_right: &[f64]) -> f64 {
    2.0 * w_left * w_right * dist_sq(mean_left, mean_right)
}

/// Drop in average diameter when `parent` is split into `left` and `right`,
/// with masses measured relative to `parent`.
pub fn split_decrease(
    parent: &CellView<'_>,
    left: &CellView<'_>,
    right: &CellView<'_>,
) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidPartition("bipartition has an empty side".into()));
    }
    let mut joined: Vec<usize> = left.indices.iter().chain(right.indices.iter()).copied().collect();
    let mut whole = parent.indices.to_vec();
    joined.sort_unstable();
    whole.sort_unstable();
    if joined != whole {
        return Err(Error::InvalidPartition(
            "children do not partition the parent".into(),
        ));
    }
    let m = parent.len() as f64;
    Ok(decrease_from_means(
        left.len() as f64 / m,
        right.len() as f64 / m,
        &left.mean()?,
        &right.mean()?,
    ))
}
