//! Weighted k-nearest-neighbour voting.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::{euclidean, DataPoint, Label};
use crate::ids::PlayerId;

/// Guard added to neighbour distances before inversion.
pub const WEIGHT_GUARD: f64 = 1e-12;

/// The `k` candidates nearest to `target`, ordered by distance then id.
pub fn nearest<'a>(
    target: &[f64],
    candidates: impl Iterator<Item = (PlayerId, &'a DataPoint)>,
    k: usize,
) -> Vec<(PlayerId, f64)> {
    let mut all: Vec<(PlayerId, f64)> = candidates
        .map(|(id, p)| (id, euclidean(target, &p.features)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn inverse_distance(d: f64) -> f64 {
    1.0 / (d + WEIGHT_GUARD)
}

/// Per-label vote mass of the `k` nearest members.
pub fn votes<'a>(
    target: &[f64],
    members: impl Iterator<Item = (PlayerId, &'a DataPoint)> + Clone,
    k: usize,
) -> BTreeMap<Label, f64> {
    let labels: BTreeMap<PlayerId, Label> = members.clone().map(|(id, p)| (id, p.label)).collect();
    let mut out = BTreeMap::new();
    for (id, d) in nearest(target, members, k) {
        *out.entry(labels[&id]).or_insert(0.0) += inverse_distance(d);
    }
    out
}

/// Label with the largest score; ties go to the smallest label.
pub fn argmax(scores: &BTreeMap<Label, f64>) -> Option<Label> {
    let mut best: Option<(Label, f64)> = None;
    for (l, s) in scores {
        if best.is_none_or(|(_, b)| *s > b) {
            best = Some((*l, *s));
        }
    }
    best.map(|(l, _)| l)
}
