//! RBF kernel relevance and a Parzen-style kernel scorer.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::{squared_distance, DataPoint, Label};
use crate::ids::PlayerId;

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    libm::exp(-gamma * squared_distance(a, b))
}

/// Per-label kernel mass of `members` at `target`.
pub fn scores<'a>(
    gamma: f64,
    target: &[f64],
    members: impl Iterator<Item = (PlayerId, &'a DataPoint)>,
) -> BTreeMap<Label, f64> {
    let mut out = BTreeMap::new();
    for (_, p) in members {
        *out.entry(p.label).or_insert(0.0) += rbf(gamma, target, &p.features);
    }
    out
}

/// Median-heuristic bandwidth `1 / median ||x_i - x_j||^2` over distinct pairs.
/// Falls back to `1.0` when every pair coincides.
pub fn median_heuristic_gamma(points: &[&DataPoint]) -> f64 {
    let mut d: Vec<f64> = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(squared_distance(&points[i].features, &points[j].features));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let med = if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    };
    if med > 0.0 {
        1.0 / med
    } else {
        1.0
    }
}
