use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

/// Class label.
pub type Label = u32;

/// One record: a player when it joins the training pool, a task when it is
/// evaluated against.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DataPoint {
    pub id: u32,
    pub features: Vec<f64>,
    pub label: Label,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub embedding: Option<Vec<f64>>,
}

impl DataPoint {
    pub fn new(id: u32, features: Vec<f64>, label: Label) -> Self {
        DataPoint {
            id,
            features,
            label,
            embedding: None,
        }
    }

    /// The embedding when present, the raw features otherwise.
    pub fn representation(&self) -> &[f64] {
        self.embedding.as_deref().unwrap_or(&self.features)
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(squared_distance(a, b))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Undirected graph over record ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Graph {
    adjacency: BTreeMap<u32, BTreeSet<u32>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, u: u32) {
        self.adjacency.entry(u).or_default();
    }

    /// Adds an undirected edge; self loops are ignored.
    pub fn add_edge(&mut self, u: u32, v: u32) {
        self.add_node(u);
        self.add_node(v);
        if u != v {
            self.adjacency.get_mut(&u).unwrap().insert(v);
            self.adjacency.get_mut(&v).unwrap().insert(u);
        }
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut g = Graph::new();
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn nodes(&self) -> impl Iterator<Item = u32> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn contains(&self, u: u32) -> bool {
        self.adjacency.contains_key(&u)
    }

    pub fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.adjacency.get(&u).into_iter().flatten().copied()
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adjacency.get(&u).map_or(0, |s| s.len())
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(u, vs)| vs.iter().filter(move |v| *v > u).map(move |v| (*u, *v)))
    }
}
