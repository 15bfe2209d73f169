//! CART classification tree with the Gini criterion.
//!
//! Nodes are numbered in creation (pre-)order, so the root is node 0 and a
//! decision path is the list of internal node ids from the root down.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::{DataPoint, Label};
use crate::ids::PlayerId;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: BTreeMap<Label, usize>,
        members: Vec<PlayerId>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

fn gini(counts: &BTreeMap<Label, usize>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .values()
        .map(|&c| (c as f64 / n) * (c as f64 / n))
        .sum::<f64>()
}

fn count_labels(rows: &[(PlayerId, &DataPoint)]) -> BTreeMap<Label, usize> {
    let mut c = BTreeMap::new();
    for (_, p) in rows {
        *c.entry(p.label).or_insert(0) += 1;
    }
    c
}

impl Tree {
    pub fn fit(rows: &[(PlayerId, &DataPoint)], max_depth: usize, min_leaf: usize) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        let mut rows = rows.to_vec();
        rows.sort_by_key(|(id, _)| *id);
        tree.grow(&rows, 0, max_depth, min_leaf.max(1));
        tree
    }

    fn grow(
        &mut self,
        rows: &[(PlayerId, &DataPoint)],
        depth: usize,
        max_depth: usize,
        min_leaf: usize,
    ) -> usize {
        let id = self.nodes.len();
        let counts = count_labels(rows);
        let leaf = Node::Leaf {
            counts: counts.clone(),
            members: rows.iter().map(|(p, _)| *p).collect(),
        };
        self.nodes.push(leaf);
        if depth >= max_depth || counts.len() <= 1 || rows.len() < 2 * min_leaf {
            return id;
        }
        let Some((feature, threshold)) = best_split(rows, &counts, min_leaf) else {
            return id;
        };
        let (l, r): (Vec<_>, Vec<_>) = rows
            .iter()
            .copied()
            .partition(|(_, p)| p.features[feature] <= threshold);
        let left = self.grow(&l, depth + 1, max_depth, min_leaf);
        let right = self.grow(&r, depth + 1, max_depth, min_leaf);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Internal node ids visited by `x`, and the reached leaf id.
    pub fn route(&self, x: &[f64]) -> (Vec<u32>, usize) {
        let mut path = Vec::new();
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    path.push(at as u32);
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { .. } => return (path, at),
            }
        }
    }

    pub fn leaf(&self, x: &[f64]) -> (&BTreeMap<Label, usize>, &[PlayerId]) {
        let (_, at) = self.route(x);
        match &self.nodes[at] {
            Node::Leaf { counts, members } => (counts, members),
            Node::Split { .. } => unreachable!("route ends at a leaf"),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn best_split(
    rows: &[(PlayerId, &DataPoint)],
    parent: &BTreeMap<Label, usize>,
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let n = rows.len();
    let dim = rows[0].1.features.len();
    let parent_impurity = gini(parent, n);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..dim {
        let mut sorted: Vec<(f64, Label)> = rows.iter().map(|(_, p)| (p.features[f], p.label)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left: BTreeMap<Label, usize> = BTreeMap::new();
        let mut right = parent.clone();
        for i in 0..n - 1 {
            let lbl = sorted[i].1;
            *left.entry(lbl).or_insert(0) += 1;
            let r = right.get_mut(&lbl).unwrap();
            *r -= 1;
            if *r == 0 {
                right.remove(&lbl);
            }
            let nl = i + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf || sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let score = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            if best.is_none_or(|(b, _, _)| score < b - 1e-15) {
                best = Some((score, f, 0.5 * (sorted[i].0 + sorted[i + 1].0)));
            }
        }
    }
    match best {
        Some((score, f, thr)) if score < parent_impurity - 1e-12 => Some((f, thr)),
        _ => None,
    }
}
