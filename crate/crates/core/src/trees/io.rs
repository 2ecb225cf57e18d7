//! Line-oriented JSON persistence for built trees.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SplitRecord, TreeNode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Leaf,
    Projection,
    Distance,
}

/// One node as stored on disk. Member indices are not kept, only counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub member_count: usize,
}

impl SavedNode {
    pub(crate) fn from_node(node: &TreeNode) -> Self {
        let mut saved = SavedNode {
            id: node.id,
            parent: node.parent,
            depth: node.depth,
            kind: NodeKind::Leaf,
            axis: None,
            direction: None,
            threshold: None,
            center: None,
            radius: None,
            member_count: node.members.len(),
        };
        match (&node.split, node.children) {
            (Some(SplitRecord::Projection { direction, threshold, axis }), Some(_)) => {
                saved.kind = NodeKind::Projection;
                saved.threshold = Some(*threshold);
                match axis {
                    Some(a) => saved.axis = Some(*a),
                    None => saved.direction = Some(direction.clone()),
                }
            }
            (Some(SplitRecord::Distance { center, radius }), Some(_)) => {
                saved.kind = NodeKind::Distance;
                saved.center = Some(center.clone());
                saved.radius = Some(*radius);
            }
            _ => {}
        }
        saved
    }
}

#[derive(Debug, Clone)]
struct RoutingNode {
    depth: usize,
    member_count: usize,
    split: Option<SplitRecord>,
    children: Option<(usize, usize)>,
}

/// A tree reloaded from disk: enough to route queries, no member lists.
#[derive(Debug, Clone)]
pub struct RoutingTree {
    dim: usize,
    nodes: Vec<RoutingNode>,
}

fn bad(origin: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_path_buf(),
        message: format!("line {line}: {}", message.into()),
    }
}

impl RoutingTree {
    /// Rebuilds a tree from nodes listed in id order.
    pub fn from_saved(nodes: &[SavedNode], dim: usize) -> Result<Self> {
        Self::assemble(nodes.iter().cloned().enumerate().map(|(i, n)| (i + 1, n)), dim, Path::new("<nodes>"))
    }

    pub fn read_jsonl<R: BufRead>(reader: R, dim: usize, origin: &Path) -> Result<Self> {
        let mut saved = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let node: SavedNode = serde_json::from_str(&line).map_err(|e| bad(origin, i + 1, e.to_string()))?;
            saved.push((i + 1, node));
        }
        Self::assemble(saved.into_iter(), dim, origin)
    }

    pub fn load(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(file), dim, path)
    }

    fn assemble(saved: impl Iterator<Item = (usize, SavedNode)>, dim: usize, origin: &Path) -> Result<Self> {
        let mut nodes: Vec<RoutingNode> = Vec::new();
        for (line, s) in saved {
            if s.id != nodes.len() {
                return Err(bad(origin, line, format!("expected node id {}, found {}", nodes.len(), s.id)));
            }
            let split = match s.kind {
                NodeKind::Leaf => None,
                NodeKind::Projection => {
                    let threshold = s.threshold.ok_or_else(|| bad(origin, line, "projection node without threshold"))?;
                    let (direction, axis) = match (s.axis, s.direction) {
                        (Some(a), _) if a < dim => {
                            let mut e = vec![0.0; dim];
                            e[a] = 1.0;
                            (e, Some(a))
                        }
                        (Some(a), _) => return Err(bad(origin, line, format!("axis {a} out of range for dimension {dim}"))),
                        (None, Some(v)) if v.len() == dim => (v, None),
                        (None, Some(v)) => {
                            return Err(bad(origin, line, format!("direction has {} coordinates, expected {dim}", v.len())))
                        }
                        (None, None) => return Err(bad(origin, line, "projection node without axis or direction")),
                    };
                    Some(SplitRecord::Projection { direction, threshold, axis })
                }
                NodeKind::Distance => {
                    let center = s.center.ok_or_else(|| bad(origin, line, "distance node without center"))?;
                    let radius = s.radius.ok_or_else(|| bad(origin, line, "distance node without radius"))?;
                    if center.len() != dim {
                        return Err(bad(origin, line, format!("center has {} coordinates, expected {dim}", center.len())));
                    }
                    Some(SplitRecord::Distance { center, radius })
                }
            };
            match s.parent {
                None if s.id != 0 => return Err(bad(origin, line, "only node 0 may lack a parent")),
                Some(p) if p >= s.id => return Err(bad(origin, line, "parent must precede child")),
                Some(p) => {
                    let parent = &mut nodes[p];
                    if parent.split.is_none() {
                        return Err(bad(origin, line, format!("parent {p} is a leaf")));
                    }
                    match &mut parent.children {
                        None => parent.children = Some((s.id, usize::MAX)),
                        Some((_, r)) if *r == usize::MAX => *r = s.id,
                        Some(_) => return Err(bad(origin, line, format!("parent {p} has more than two children"))),
                    }
                }
                None => {}
            }
            nodes.push(RoutingNode {
                depth: s.depth,
                member_count: s.member_count,
                split,
                children: None,
            });
        }
        if nodes.is_empty() {
            return Err(bad(origin, 0, "tree has no nodes"));
        }
        if let Some((i, _)) = nodes
            .iter()
            .enumerate()
            .find(|(_, n)| n.split.is_some() && !matches!(n.children, Some((_, r)) if r != usize::MAX))
        {
            return Err(bad(origin, 0, format!("split node {i} is missing children")));
        }
        Ok(RoutingTree { dim, nodes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn member_count(&self, id: usize) -> usize {
        self.nodes[id].member_count
    }

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
}
