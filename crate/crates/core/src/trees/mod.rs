//! Partition trees built by recursive bisection.
//!
//! Every rule plugs into the same builder: a cell with at most `min_size`
//! points (or at `max_depth`) is a leaf, otherwise it is cut in two and both
//! halves are built the same way. For the RP, PD and 2-means rules a cell
//! whose maximum diameter dwarfs its average diameter
//! (`Δ² ≥ c·Δ_a²`) is first stripped of its outliers by a distance split.

mod io;
mod split;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PointSet;
use crate::diameters::{
    avg_diam_sq_of, exact_max_diam_sq, max_diam_sq_upper_bound, CellView, DiameterStats,
    DEFAULT_EXACT_DIAMETER_LIMIT,
};
use crate::error::{Error, Result};
use crate::linalg::mean;

pub use io::{NodeKind, RoutingTree, SavedNode};
pub use split::{
    split_distance, split_dyadic, split_kd, split_pd, split_rp, split_two_means, two_means_cost,
    BoundingBox, Split, SplitRecord,
};

pub const DEFAULT_BAG_SIZE: usize = 20;
pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_OUTLIER_RATIO: f64 = 10.0;
pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitRule {
    Dyadic,
    Kd,
    Rp { bag_size: usize },
    Pd,
    TwoMeans { restarts: usize, max_iters: usize },
}

impl SplitRule {
    pub const ALL_NAMES: [&'static str; 5] = ["dyadic", "kd", "rp", "pd", "2m"];

    pub fn rp() -> Self {
        SplitRule::Rp {
            bag_size: DEFAULT_BAG_SIZE,
        }
    }

    pub fn two_means() -> Self {
        SplitRule::TwoMeans {
            restarts: DEFAULT_RESTARTS,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SplitRule::Dyadic => "dyadic",
            SplitRule::Kd => "kd",
            SplitRule::Rp { .. } => "rp",
            SplitRule::Pd => "pd",
            SplitRule::TwoMeans { .. } => "2m",
        }
    }

    /// Only the data-driven irregular rules get the outlier distance split;
    /// the axis-parallel rules are always plain.
    pub fn allows_distance_split(&self) -> bool {
        matches!(self, SplitRule::Rp { .. } | SplitRule::Pd | SplitRule::TwoMeans { .. })
    }
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitRule {
    type Err = Error;

    /// Parses a rule name with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dyadic" => Ok(SplitRule::Dyadic),
            "kd" | "k-d" => Ok(SplitRule::Kd),
            "rp" => Ok(SplitRule::rp()),
            "pd" | "pca" => Ok(SplitRule::Pd),
            "2m" | "two_means" | "2-means" => Ok(SplitRule::two_means()),
            other => Err(Error::param(format!(
                "unknown split rule `{other}` (expected one of {:?})",
                SplitRule::ALL_NAMES
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub rule: SplitRule,
    pub min_size: usize,
    pub max_depth: usize,
    /// Outlier ratio: a cell with `Δ² ≥ c·Δ_a²` is split by distance.
    pub c: f64,
    pub enable_distance_split: bool,
    pub seed: u64,
    /// Cells larger than this use an upper bound for `Δ²`.
    pub exact_diameter_limit: usize,
}

impl BuildConfig {
    pub fn new(rule: SplitRule) -> Self {
        BuildConfig {
            rule,
            min_size: 1,
            max_depth: DEFAULT_MAX_DEPTH,
            c: DEFAULT_OUTLIER_RATIO,
            enable_distance_split: true,
            seed: 0,
            exact_diameter_limit: DEFAULT_EXACT_DIAMETER_LIMIT,
        }
    }

    pub fn with_min_size(mut self, min_size: usize) -> Self {
        self.min_size = min_size;
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_outlier_ratio(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_distance_split(mut self, enable: bool) -> Self {
        self.enable_distance_split = enable;
        self
    }

    pub fn with_exact_diameter_limit(mut self, limit: usize) -> Self {
        self.exact_diameter_limit = limit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_size == 0 {
            return Err(Error::param("min_size must be at least 1"));
        }
        if !(self.c > 4.0) || !self.c.is_finite() {
            return Err(Error::param(format!("outlier ratio c must exceed 4, got {}", self.c)));
        }
        match self.rule {
            SplitRule::Rp { bag_size: 0 } => Err(Error::param("bag_size must be at least 1")),
            SplitRule::TwoMeans { restarts, max_iters } if restarts == 0 || max_iters == 0 => {
                Err(Error::param("2-means restarts and max_iters must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Point indices in this cell, ascending.
    pub members: Vec<usize>,
    pub stats: DiameterStats,
    pub mean: Vec<f64>,
    pub split: Option<SplitRecord>,
    /// `(left, right)` node ids.
    pub children: Option<(usize, usize)>,
    /// Dyadic trees only.
    pub bbox: Option<BoundingBox>,
    /// This node was cut by the outlier distance split.
    pub distance_split: bool,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// A built tree over a borrowed point set. Node ids follow breadth-first
/// order, so every level occupies a contiguous id range and left children
/// precede right children.
#[derive(Debug, Clone)]
pub struct PartitionTree<'a> {
    points: &'a PointSet,
    config: BuildConfig,
    nodes: Vec<TreeNode>,
    height: usize,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG stream key of a child, derived from its parent's key and side only, so
/// the stream a cell sees depends on its path from the root and not on build
/// order.
fn child_key(parent: u64, side: u64) -> u64 {
    splitmix64(parent ^ GOLDEN.wrapping_mul(side + 1))
}

fn node_stats(points: &PointSet, members: &[usize], exact_limit: usize) -> DiameterStats {
    let approximate = members.len() > exact_limit;
    let max_diam_sq = if approximate {
        max_diam_sq_upper_bound(points, members)
    } else {
        exact_max_diam_sq(points, members)
    };
    DiameterStats {
        max_diam_sq,
        avg_diam_sq: avg_diam_sq_of(points, members),
        count: members.len(),
        approximate,
    }
}

impl<'a> PartitionTree<'a> {
    /// Builds the tree. Cells that cannot be split (identical points, zero
    /// spread, every split degenerate) become leaves.
    pub fn build(points: &'a PointSet, config: &BuildConfig) -> Result<Self> {
        config.validate()?;
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut keys: Vec<u64> = Vec::new();
        let root_members: Vec<usize> = (0..points.len()).collect();
        let root_box = matches!(config.rule, SplitRule::Dyadic)
            .then(|| BoundingBox::around(points, &root_members));
        let mut queue = VecDeque::new();
        queue.push_back((None, 0usize, root_members, root_box, splitmix64(config.seed)));

        while let Some((parent, depth, members, bbox, key)) = queue.pop_front() {
            let id = nodes.len();
            if let Some(p) = parent {
                let p: &mut TreeNode = &mut nodes[p];
                match &mut p.children {
                    None => p.children = Some((id, usize::MAX)),
                    Some((_, right)) => *right = id,
                }
            }
            let stats = node_stats(points, &members, config.exact_diameter_limit);
            let centroid = mean(&points.rows(&members)).expect("cells are nonempty");
            nodes.push(TreeNode {
                id,
                parent,
                depth,
                members,
                stats,
                mean: centroid,
                split: None,
                children: None,
                bbox,
                distance_split: false,
            });
            keys.push(key);

            let node = &nodes[id];
            if node.members.len() <= config.min_size || depth >= config.max_depth {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            let Some((split, distance, boxes)) = choose_split(points, config, node, &mut rng) else {
                continue;
            };
            if split.left.is_empty() || split.right.is_empty() {
                continue;
            }
            let (left_box, right_box) = match boxes {
                Some((l, r)) => (Some(l), Some(r)),
                None => (None, None),
            };
            let node = &mut nodes[id];
            node.split = Some(split.record);
            node.distance_split = distance;
            queue.push_back((Some(id), depth + 1, split.left, left_box, child_key(key, 0)));
            queue.push_back((Some(id), depth + 1, split.right, right_box, child_key(key, 1)));
        }

        let height = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        Ok(PartitionTree {
            points,
            config: config.clone(),
            nodes,
            height,
        })
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Depth of the deepest node.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Descends from the root until `level` or a leaf is reached.
    pub fn route(&self, q: &[f64], level: usize) -> usize {
        let mut id = 0;
        loop {
            let node = &self.nodes[id];
            match (&node.split, node.children) {
                (Some(rec), Some((l, r))) if node.depth < level => {
                    id = if rec.goes_left(q) { l } else { r };
                }
                _ => return id,
            }
        }
    }

    /// Ids of the cells of the level-`l` partition: all depth-`l` nodes plus
    /// the leaves above that depth, in id order.
    pub fn level_nodes(&self, level: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.depth == level || (n.depth < level && n.is_leaf()))
            .map(|n| n.id)
            .collect()
    }

    /// The level-`l` partition as cells weighted by their share of the data.
    pub fn level_partition(&self, level: usize) -> Vec<CellView<'_>> {
        let n = self.points.len() as f64;
        self.level_nodes(level)
            .into_iter()
            .map(|id| {
                let members = &self.nodes[id].members;
                CellView::unchecked(self.points, members, members.len() as f64 / n)
            })
            .collect()
    }

    pub fn to_saved(&self) -> Vec<SavedNode> {
        self.nodes.iter().map(SavedNode::from_node).collect()
    }

    /// One JSON object per node per line.
    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for node in self.to_saved() {
            serde_json::to_writer(&mut w, &node)?;
            w.write_all(b"\n").map_err(|e| Error::io("<tree>", e))?;
        }
        Ok(())
    }
}

type ChosenSplit = (Split, bool, Option<(BoundingBox, BoundingBox)>);

fn wants_distance_split(points: &PointSet, config: &BuildConfig, node: &TreeNode) -> bool {
    if !(config.enable_distance_split && config.rule.allows_distance_split()) {
        return false;
    }
    let avg = node.stats.avg_diam_sq;
    if !(avg > 0.0) {
        return false;
    }
    let threshold = config.c * avg;
    if node.stats.max_diam_sq < threshold {
        return false;
    }
    // The bound can overshoot; decide on the exact value.
    if node.stats.approximate {
        return exact_max_diam_sq(points, &node.members) >= threshold;
    }
    true
}

fn choose_split(points: &PointSet, config: &BuildConfig, node: &TreeNode, rng: &mut ChaCha8Rng) -> Option<ChosenSplit> {
    let members = &node.members;
    if wants_distance_split(points, config, node) {
        return split_distance(points, members).map(|s| (s, true, None));
    }
    let split = match config.rule {
        SplitRule::Dyadic => {
            let bbox = node.bbox.as_ref().expect("dyadic nodes carry a box");
            return split_dyadic(points, members, bbox).map(|(s, l, r)| (s, false, Some((l, r))));
        }
        SplitRule::Kd => split_kd(points, members),
        SplitRule::Rp { bag_size } => split_rp(points, members, bag_size, rng),
        SplitRule::Pd => split_pd(points, members),
        SplitRule::TwoMeans { restarts, max_iters } => {
            split_two_means(points, members, restarts, max_iters, rng)
        }
    };
    split.map(|s| (s, false, None))
}
