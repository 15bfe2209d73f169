use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ids::TaskId;
use crate::matrix::{Provenance, ShapleyMatrix, ValueColumn};

/// Guard added to anchor distances before inversion.
pub const DISTANCE_GUARD: f64 = 1e-9;

/// An anchor used by an interpolated column.
#[derive(Clone, Debug, PartialEq)]
pub struct UsedAnchor {
    pub task: TaskId,
    pub distance: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interpolation {
    pub column: ValueColumn,
    pub used: Vec<UsedAnchor>,
}

impl Interpolation {
    /// Largest distance among the used anchors.
    pub fn radius(&self) -> f64 {
        self.used.iter().map(|u| u.distance).fold(0.0, f64::max)
    }
}

/// Convex weights over the selected anchors: inverse distance, or uniform
/// over the zero-distance anchors when there is an exact match.
pub fn anchor_weights(distances: &[f64]) -> Vec<f64> {
    let zeros = distances.iter().filter(|d| **d == 0.0).count();
    let raw: Vec<f64> = if zeros > 0 {
        distances
            .iter()
            .map(|d| if *d == 0.0 { 1.0 } else { 0.0 })
            .collect()
    } else {
        distances.iter().map(|d| 1.0 / (d + DISTANCE_GUARD)).collect()
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Column of `task` interpolated from the `k` nearest finite-distance anchors.
///
/// `candidates` lists `(anchor, distance)` in anchor order, which breaks
/// distance ties. A player whose cell is ABSENT in some used anchor column
/// is interpolated from the remaining anchors with renormalized weights.
pub fn interpolate(
    matrix: &ShapleyMatrix,
    task: TaskId,
    candidates: &[(TaskId, f64)],
    k: usize,
) -> Result<Interpolation> {
    let mut ranked: Vec<(usize, TaskId, f64)> = candidates
        .iter()
        .enumerate()
        .filter(|(_, (_, d))| d.is_finite())
        .map(|(i, (t, d))| (i, *t, *d))
        .collect();
    if ranked.is_empty() || k == 0 {
        return Err(Error::NoCompatibleAnchor(task));
    }
    ranked.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    let distances: Vec<f64> = ranked.iter().map(|r| r.2).collect();
    let weights = anchor_weights(&distances);
    let columns = ranked
        .iter()
        .map(|r| matrix.column_values(r.1))
        .collect::<Result<Vec<_>>>()?;
    let mut column = ValueColumn::new(task, Provenance::Interpolated);
    for (i, p) in matrix.players().iter().enumerate() {
        let (mut acc, mut mass) = (0.0, 0.0);
        for (c, w) in columns.iter().zip(&weights) {
            if let Some(v) = c[i] {
                acc += w * v;
                mass += w;
            }
        }
        let value = if mass > 0.0 { acc / mass } else { 0.0 };
        if value != 0.0 {
            column.entries.insert(*p, value);
        }
    }
    let used = ranked
        .iter()
        .zip(weights)
        .map(|(r, weight)| UsedAnchor {
            task: r.1,
            distance: r.2,
            weight,
        })
        .collect();
    Ok(Interpolation { column, used })
}
