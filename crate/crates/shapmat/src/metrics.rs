//! Agreement between an estimated matrix and a reference matrix.
//!
//! Both correlations are taken over `Omega`, the entries whose reference
//! magnitude exceeds [`OMEGA_THRESHOLD`]; ABSENT cells never count.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use shapmat_core::{PlayerId, ShapleyMatrix, TaskId};

use crate::error::{HarnessError, Result};

pub const OMEGA_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub spearman: f64,
    pub pearson: f64,
    /// Entries that passed the reference magnitude filter.
    pub omega: usize,
    /// Total wall-clock seconds per event kind.
    pub seconds_by_kind: BTreeMap<String, f64>,
    pub events_by_kind: BTreeMap<String, usize>,
    pub utility_evaluations: u64,
    pub trainings: u64,
}

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation. A constant side has no defined correlation; it
/// scores 1 when both sides are identical and 0 otherwise.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if x == y { 1.0 } else { 0.0 };
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Paired (estimate, reference) values over `Omega` restricted to `tasks`.
pub fn omega_pairs(
    est: &ShapleyMatrix,
    reference: &ShapleyMatrix,
    tasks: &[TaskId],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let a: BTreeSet<PlayerId> = est.players().iter().copied().collect();
    let b: BTreeSet<PlayerId> = reference.players().iter().copied().collect();
    if a != b {
        return Err(HarnessError::Shape("player sets differ".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in tasks {
        for p in reference.players() {
            let r = reference.get(*p, *t)?;
            let e = est
                .get(*p, *t)
                .map_err(|_| HarnessError::Shape(format!("task {} missing from the estimate", t.0)))?;
            match (e, r) {
                (_, None) => {}
                (None, Some(_)) => {
                    return Err(HarnessError::Shape(format!(
                        "estimate is ABSENT at player {}, task {}",
                        p.0, t.0
                    )))
                }
                (Some(e), Some(r)) => {
                    if r.abs() > OMEGA_THRESHOLD {
                        xs.push(e);
                        ys.push(r);
                    }
                }
            }
        }
    }
    Ok((xs, ys))
}

/// Spearman and Pearson correlation over `Omega` on the given tasks.
pub fn metrics_over(est: &ShapleyMatrix, reference: &ShapleyMatrix, tasks: &[TaskId]) -> Result<MetricsReport> {
    let (x, y) = omega_pairs(est, reference, tasks)?;
    if x.len() < 2 {
        return Err(HarnessError::InsufficientSupport(x.len()));
    }
    Ok(MetricsReport {
        spearman: spearman(&x, &y),
        pearson: pearson(&x, &y),
        omega: x.len(),
        ..MetricsReport::default()
    })
}

/// Metrics over every task; both matrices must list the same tasks.
pub fn metrics(est: &ShapleyMatrix, reference: &ShapleyMatrix) -> Result<MetricsReport> {
    let a: BTreeSet<TaskId> = est.tasks().collect();
    let b: BTreeSet<TaskId> = reference.tasks().collect();
    if a != b {
        return Err(HarnessError::Shape("task sets differ".into()));
    }
    let tasks: Vec<TaskId> = reference.tasks().collect();
    metrics_over(est, reference, &tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use shapmat_core::{Provenance, ValueColumn};

    fn single_column(values: &[f64]) -> ShapleyMatrix {
        let mut m = ShapleyMatrix::new((0..values.len() as u32).map(PlayerId)).unwrap();
        let mut c = ValueColumn::new(TaskId(1000), Provenance::ExactLocal);
        c.entries = values.iter().enumerate().map(|(i, v)| (PlayerId(i as u32), *v)).collect();
        m.append_column(&c, true).unwrap();
        m
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn omega_filter_by_hand() {
        let r = single_column(&[0.5, 0.0005, -0.2, 0.9]);
        let m = metrics(&r, &r).unwrap();
        assert_eq!(m.omega, 3);
        assert_eq!((m.spearman, m.pearson), (1.0, 1.0));
    }

    #[test]
    fn reversal_gives_minus_one() {
        let r = single_column(&[0.5, -0.3, 0.2, 0.9, 0.1]);
        let e = single_column(&[-0.5, 0.3, -0.2, -0.9, -0.1]);
        let m = metrics(&e, &r).unwrap();
        assert_eq!(m.spearman, -1.0);
        assert!((m.pearson + 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_entries() {
        let r = single_column(&[0.5, 0.0, 0.0001]);
        assert!(matches!(metrics(&r, &r), Err(HarnessError::InsufficientSupport(1))));
    }

    #[test]
    fn pearson_matches_hand_computation() {
        // x = (1,2,3), y = (1,3,2): cov = 0.5, var = 1 each -> r = 0.5
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]) - 0.5).abs() < 1e-15);
        // ranks of (10, 20, 20) = (1, 2.5, 2.5) against (1, 2, 3)
        let want = pearson(&[1.0, 2.5, 2.5], &[1.0, 2.0, 3.0]);
        assert_eq!(spearman(&[10.0, 20.0, 20.0], &[1.0, 2.0, 3.0]), want);
        assert!((want - 0.8660254037844387).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn self_agreement_is_perfect(v in prop::collection::vec(-1.0f64..1.0, 2..30)) {
            let r = single_column(&v);
            if let Ok(m) = metrics(&r, &r) {
                prop_assert_eq!(m.spearman, 1.0);
                prop_assert!((m.pearson - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn filtered_entries_are_ignored(
            v in prop::collection::vec(-1.0f64..1.0, 3..30),
            noise in prop::collection::vec(-5.0f64..5.0, 30),
        ) {
            let v: Vec<f64> = v.iter().enumerate().map(|(i, x)| if i % 3 == 0 { x * 1e-3 } else { *x }).collect();
            let r = single_column(&v);
            let e: Vec<f64> = v.iter().zip(&noise).map(|(x, n)| x + 0.1 * n).collect();
            let mut bumped = e.clone();
            for (i, x) in v.iter().enumerate() {
                if x.abs() <= OMEGA_THRESHOLD {
                    bumped[i] = noise[i] * 100.0;
                }
            }
            let a = metrics(&single_column(&e), &r);
            let b = metrics(&single_column(&bumped), &r);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn correlations_stay_in_range(
            x in prop::collection::vec(-1.0f64..1.0, 2..30),
            y in prop::collection::vec(-1.0f64..1.0, 30),
        ) {
            let y = &y[..x.len()];
            let r = pearson(&x, y);
            let s = spearman(&x, y);
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
