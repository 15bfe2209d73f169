//! Model-induced distances between task profiles.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{dot, euclidean, Graph};
use crate::error::{Error, Result};
use crate::ids::PlayerId;
use crate::models::{ProfileData, ProfileKind, SupportProfile};

/// How differing task labels enter the distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LabelRule {
    /// Tasks with different labels are infinitely far apart.
    #[default]
    Strict,
    /// Adds 1 to the base distance; representation profiles only.
    Additive,
    /// Labels are not compared.
    Ignore,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DistanceConfig {
    /// Profile kind to compare; `None` uses the model family's own kind.
    pub kind: Option<ProfileKind>,
    pub label_rule: LabelRule,
    pub ppr_alpha: f64,
    pub ppr_tolerance: f64,
    pub ppr_max_iterations: usize,
    /// Known Lipschitz constant of the utility in the distance, if any.
    pub lipschitz: Option<f64>,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            kind: None,
            label_rule: LabelRule::Strict,
            ppr_alpha: 0.15,
            ppr_tolerance: 1e-8,
            ppr_max_iterations: 10_000,
            lipschitz: None,
        }
    }
}

impl DistanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ppr_alpha > 0.0 && self.ppr_alpha < 1.0) {
            return Err(Error::InvalidConfig("PPR teleport probability must lie in (0, 1)"));
        }
        if !(self.ppr_tolerance > 0.0) {
            return Err(Error::InvalidConfig("PPR tolerance must be positive"));
        }
        if self.label_rule == LabelRule::Additive
            && self.kind.is_some_and(|k| k != ProfileKind::Representation)
        {
            return Err(Error::InvalidConfig(
                "additive label rule applies to representation profiles only",
            ));
        }
        Ok(())
    }
}

/// `1 - sum min(w, w') / sum max(w, w')`; zero when both profiles are empty.
pub fn weighted_tanimoto(
    p: &BTreeMap<PlayerId, f64>,
    q: &BTreeMap<PlayerId, f64>,
) -> f64 {
    let keys: BTreeSet<&PlayerId> = p.keys().chain(q.keys()).collect();
    let (mut lo, mut hi) = (0.0, 0.0);
    for k in keys {
        let a = p.get(k).copied().unwrap_or(0.0);
        let b = q.get(k).copied().unwrap_or(0.0);
        lo += a.min(b);
        hi += a.max(b);
    }
    if hi == 0.0 {
        0.0
    } else {
        1.0 - lo / hi
    }
}

/// Jaccard distance between two decision paths; zero for two empty paths.
pub fn path_jaccard(p: &[u32], q: &[u32]) -> f64 {
    let a: BTreeSet<u32> = p.iter().copied().collect();
    let b: BTreeSet<u32> = q.iter().copied().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(&b).count() as f64 / union as f64
}

/// Angular distance `(1 - cos) / 2`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = libm::sqrt(dot(a, a));
    let nb = libm::sqrt(dot(b, b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    let cos = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    Ok(0.5 * (1.0 - cos))
}

/// Personalized PageRank vector of node `t` by power iteration on
/// `pi = alpha e_t + (1 - alpha) A pi` with a column-normalized adjacency.
/// Nodes without edges keep their own mass, so an isolated `t` yields `e_t`.
pub fn ppr_vector(graph: &Graph, t: u32, cfg: &DistanceConfig) -> Result<BTreeMap<u32, f64>> {
    cfg.validate()?;
    let mut nodes: Vec<u32> = graph.nodes().collect();
    if !graph.contains(t) {
        nodes.push(t);
        nodes.sort_unstable();
    }
    let index: BTreeMap<u32, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let adj: Vec<Vec<usize>> = nodes
        .iter()
        .map(|n| {
            if graph.contains(*n) {
                graph.neighbors(*n).map(|m| index[&m]).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    let src = index[&t];
    let alpha = cfg.ppr_alpha;
    let mut pi = vec![0.0; nodes.len()];
    pi[src] = 1.0;
    for _ in 0..cfg.ppr_max_iterations {
        let mut next = vec![0.0; nodes.len()];
        for (v, nbrs) in adj.iter().enumerate() {
            if nbrs.is_empty() {
                next[v] += (1.0 - alpha) * pi[v];
            } else {
                let share = (1.0 - alpha) * pi[v] / nbrs.len() as f64;
                for &u in nbrs {
                    next[u] += share;
                }
            }
        }
        next[src] += alpha;
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| libm::fabs(a - b)).sum();
        pi = next;
        if change < cfg.ppr_tolerance {
            break;
        }
    }
    Ok(nodes.into_iter().zip(pi).filter(|(_, w)| *w > 0.0).collect())
}

/// Base distance between two profiles of the same kind, labels ignored.
pub fn base_distance(p: &SupportProfile, q: &SupportProfile) -> Result<f64> {
    if p.kind != q.kind {
        return Err(Error::KindMismatch);
    }
    match (&p.data, &q.data) {
        (
            ProfileData::Weights {
                weights: a,
                universe: ua,
            },
            ProfileData::Weights {
                weights: b,
                universe: ub,
            },
        ) => {
            if ua != ub {
                return Err(Error::UniverseMismatch);
            }
            Ok(weighted_tanimoto(a, b))
        }
        (ProfileData::Path { nodes: a, tree: ta }, ProfileData::Path { nodes: b, tree: tb }) => {
            if ta != tb {
                return Err(Error::TreeMismatch);
            }
            Ok(path_jaccard(a, b))
        }
        (ProfileData::Vector(a), ProfileData::Vector(b)) => {
            if a.len() != b.len() {
                return Err(Error::KindMismatch);
            }
            match p.kind {
                ProfileKind::Representation => Ok(euclidean(a, b)),
                _ => cosine_distance(a, b),
            }
        }
        _ => Err(Error::KindMismatch),
    }
}

/// `d_Gamma(t, t')` with the configured label rule.
pub fn d_gamma(p: &SupportProfile, q: &SupportProfile, cfg: &DistanceConfig) -> Result<f64> {
    let base = base_distance(p, q)?;
    let differ = p.label != q.label;
    match cfg.label_rule {
        LabelRule::Strict if differ => Ok(f64::INFINITY),
        LabelRule::Additive => {
            if p.kind != ProfileKind::Representation {
                return Err(Error::InvalidConfig(
                    "additive label rule applies to representation profiles only",
                ));
            }
            Ok(base + if differ { 1.0 } else { 0.0 })
        }
        _ => Ok(base),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn w(pairs: &[(u32, f64)]) -> BTreeMap<PlayerId, f64> {
        pairs.iter().map(|(p, x)| (PlayerId(*p), *x)).collect()
    }

    fn weights_profile(pairs: &[(u32, f64)], label: u32) -> SupportProfile {
        SupportProfile {
            kind: ProfileKind::NeighborWeights,
            data: ProfileData::Weights {
                weights: w(pairs),
                universe: 1,
            },
            label,
        }
    }

    #[test]
    fn tanimoto_examples() {
        let a = w(&[(1, 0.3), (2, 0.7)]);
        assert_eq!(weighted_tanimoto(&a, &a), 0.0);
        assert_eq!(weighted_tanimoto(&a, &w(&[(3, 1.0)])), 1.0);
        assert_eq!(weighted_tanimoto(&w(&[]), &w(&[])), 0.0);
        // min sum = 1 (only b shared), max sum = 3
        let d = weighted_tanimoto(&w(&[(1, 1.0), (2, 1.0)]), &w(&[(2, 1.0), (3, 1.0)]));
        assert!((d - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn path_examples() {
        assert_eq!(path_jaccard(&[1, 2, 3], &[1, 2, 3]), 0.0);
        assert_eq!(path_jaccard(&[1, 2, 3], &[1, 2, 5]), 0.5);
        assert_eq!(path_jaccard(&[], &[]), 0.0);
        assert_eq!(path_jaccard(&[1], &[1]), 0.0);
        assert_eq!(path_jaccard(&[2], &[3]), 1.0);
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_distance(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::DegenerateEmbedding));
    }

    #[test]
    fn label_rules() {
        let p = weights_profile(&[(1, 1.0)], 0);
        let q = weights_profile(&[(1, 1.0)], 1);
        let strict = DistanceConfig::default();
        assert_eq!(d_gamma(&p, &p, &strict).unwrap(), 0.0);
        assert_eq!(d_gamma(&p, &q, &strict).unwrap(), f64::INFINITY);
        let ignore = DistanceConfig {
            label_rule: LabelRule::Ignore,
            ..DistanceConfig::default()
        };
        assert_eq!(d_gamma(&p, &q, &ignore).unwrap(), 0.0);
        let additive = DistanceConfig {
            label_rule: LabelRule::Additive,
            ..DistanceConfig::default()
        };
        assert!(d_gamma(&p, &q, &additive).is_err());
        let r = |x: f64, label| SupportProfile {
            kind: ProfileKind::Representation,
            data: ProfileData::Vector(vec![x, 0.0]),
            label,
        };
        assert_eq!(d_gamma(&r(0.0, 0), &r(0.5, 1), &additive).unwrap(), 1.5);
    }

    #[test]
    fn mismatches() {
        let p = weights_profile(&[(1, 1.0)], 0);
        let mut q = p.clone();
        q.data = ProfileData::Weights {
            weights: w(&[(1, 1.0)]),
            universe: 2,
        };
        assert_eq!(base_distance(&p, &q), Err(Error::UniverseMismatch));
        let path = |tree| SupportProfile {
            kind: ProfileKind::DecisionPath,
            data: ProfileData::Path {
                nodes: vec![0],
                tree,
            },
            label: 0,
        };
        assert_eq!(base_distance(&path(1), &path(2)), Err(Error::TreeMismatch));
        assert_eq!(base_distance(&p, &path(1)), Err(Error::KindMismatch));
    }

    #[test]
    fn ppr_isolated_node_is_indicator() {
        let mut g = Graph::from_edges([(1, 2)]);
        g.add_node(7);
        let pi = ppr_vector(&g, 7, &DistanceConfig::default()).unwrap();
        assert_eq!(pi.len(), 1);
        assert_eq!(pi[&7], 1.0);
        let absent = ppr_vector(&g, 9, &DistanceConfig::default()).unwrap();
        assert_eq!(absent[&9], 1.0);
    }

    #[test]
    fn ppr_complete_graph_symmetry() {
        let mut edges = Vec::new();
        for i in 0..5u32 {
            for j in i + 1..5 {
                edges.push((i, j));
            }
        }
        let g = Graph::from_edges(edges);
        let pi = ppr_vector(&g, 2, &DistanceConfig::default()).unwrap();
        let others: Vec<f64> = (0..5).filter(|&i| i != 2).map(|i| pi[&i]).collect();
        for o in &others {
            assert!(pi[&2] > *o);
            assert!((o - others[0]).abs() < 1e-9);
        }
    }

    /// Solves `(I - (1 - a) A) pi = a e_1` on the path 1-2-3 by elimination.
    #[test]
    fn ppr_path_matches_linear_solve() {
        let g = Graph::from_edges([(1, 2), (2, 3)]);
        let alpha = 0.5;
        let cfg = DistanceConfig {
            ppr_alpha: alpha,
            ..DistanceConfig::default()
        };
        let pi = ppr_vector(&g, 1, &cfg).unwrap();
        // column-normalized adjacency: deg(1)=1, deg(2)=2, deg(3)=1
        let a = [[0.0, 0.5, 0.0], [1.0, 0.0, 1.0], [0.0, 0.5, 0.0]];
        let mut m = [[0.0; 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = if i == j { 1.0 } else { 0.0 } - (1.0 - alpha) * a[i][j];
            }
        }
        m[0][3] = alpha;
        for c in 0..3 {
            let piv = m[c][c];
            for k in c..4 {
                m[c][k] /= piv;
            }
            for r in 0..3 {
                if r != c {
                    let f = m[r][c];
                    for k in c..4 {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
        for (i, node) in [1u32, 2, 3].iter().enumerate() {
            assert!((pi[node] - m[i][3]).abs() < 1e-6, "node {node}");
        }
    }

    fn weights_strategy() -> impl Strategy<Value = BTreeMap<PlayerId, f64>> {
        prop::collection::btree_map((0u32..12).prop_map(PlayerId), 0.0f64..3.0, 0..8)
    }

    proptest! {
        #[test]
        fn tanimoto_symmetric_and_bounded(a in weights_strategy(), b in weights_strategy()) {
            let d = weighted_tanimoto(&a, &b);
            prop_assert_eq!(d, weighted_tanimoto(&b, &a));
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn tanimoto_on_binary_is_jaccard(
            a in prop::collection::btree_set(0u32..15, 0..10),
            b in prop::collection::btree_set(0u32..15, 0..10),
        ) {
            let wa = a.iter().map(|p| (PlayerId(*p), 1.0)).collect();
            let wb = b.iter().map(|p| (PlayerId(*p), 1.0)).collect();
            let union = a.union(&b).count();
            let jac = if union == 0 { 0.0 } else {
                1.0 - a.intersection(&b).count() as f64 / union as f64
            };
            prop_assert_eq!(weighted_tanimoto(&wa, &wb), jac);
        }

        #[test]
        fn path_symmetric(a in prop::collection::vec(0u32..20, 0..6), b in prop::collection::vec(0u32..20, 0..6)) {
            let d = path_jaccard(&a, &b);
            prop_assert_eq!(d, path_jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn cosine_symmetric(a in prop::collection::vec(-1.0f64..1.0, 3), b in prop::collection::vec(-1.0f64..1.0, 3)) {
            if let (Ok(d), Ok(e)) = (cosine_distance(&a, &b), cosine_distance(&b, &a)) {
                prop_assert_eq!(d, e);
                prop_assert!((0.0..=1.0).contains(&d));
            }
        }

        #[test]
        fn ppr_sums_to_one(edges in prop::collection::vec((0u32..10, 0u32..10), 1..25), t in 0u32..10) {
            let g = Graph::from_edges(edges);
            let pi = ppr_vector(&g, t, &DistanceConfig::default()).unwrap();
            let total: f64 = pi.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
        }
    }
}
