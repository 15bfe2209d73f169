//! Seeded synthetic datasets.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use shapmat_core::{DataPoint, Graph};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobSpec {
    pub classes: u32,
    pub per_class: usize,
    pub dim: usize,
    /// Distance of every class centre from the origin.
    pub separation: f64,
    /// Per-coordinate standard deviation around the centre.
    pub spread: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            classes: 3,
            per_class: 20,
            dim: 2,
            separation: 2.0,
            spread: 1.0,
        }
    }
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.per_class == 0 || self.dim == 0 {
            return Err(HarnessError::Config("blobs need classes, per_class and dim >= 1".into()));
        }
        if !(self.spread > 0.0) || !self.separation.is_finite() {
            return Err(HarnessError::Config("blob spread must be positive".into()));
        }
        Ok(())
    }
}

/// Gaussian blobs with centres evenly spaced on a circle in the first two
/// coordinates. Ids run from 0 and cycle through the classes.
pub fn blobs(spec: &BlobSpec, seed: u64) -> Result<Vec<DataPoint>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.spread).expect("positive spread");
    let n = spec.classes as usize * spec.per_class;
    Ok((0..n)
        .map(|i| {
            let label = (i % spec.classes as usize) as u32;
            let angle = TAU * label as f64 / spec.classes as f64;
            let features = (0..spec.dim)
                .map(|j| {
                    let centre = match j {
                        0 => spec.separation * angle.cos(),
                        1 => spec.separation * angle.sin(),
                        _ => 0.0,
                    };
                    centre + noise.sample(&mut rng)
                })
                .collect();
            DataPoint::new(i as u32, features, label)
        })
        .collect())
}

/// A cycle over `n` nodes plus `chords` random extra edges, with points on
/// the unit circle labelled by arc (`classes` equal arcs).
pub fn ring(n: usize, classes: u32, chords: usize, seed: u64) -> Result<(Vec<DataPoint>, Graph)> {
    if n < 3 || classes == 0 {
        return Err(HarnessError::Config("ring needs at least 3 nodes and 1 class".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::from_edges((0..n).map(|i| (i as u32, ((i + 1) % n) as u32)));
    for _ in 0..chords {
        let u = rng.random_range(0..n as u32);
        let v = rng.random_range(0..n as u32);
        g.add_edge(u, v);
    }
    let points = (0..n)
        .map(|i| {
            let angle = TAU * i as f64 / n as f64;
            let label = (i * classes as usize / n) as u32;
            DataPoint::new(i as u32, vec![angle.cos(), angle.sin()], label)
        })
        .collect();
    Ok((points, g))
}
