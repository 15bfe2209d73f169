use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{CoalitionGame, EstimateReport, McConfig};
use crate::error::{Error, Result};
use crate::ids::{Coalition, PlayerId, TaskId};
use crate::matrix::{Provenance, ValueColumn};
use crate::rng::stream;

/// Guard in the relative-change denominator.
const CHANGE_GUARD: f64 = 1e-12;

/// True when the mean relative change from `prev` to `curr` is below `threshold`:
/// `(1/n) sum |curr - prev| / (|curr| + 1e-12) < threshold`.
pub fn stopping_check(prev: &ValueColumn, curr: &ValueColumn, threshold: f64) -> Result<bool> {
    if prev.entries.len() != curr.entries.len()
        || prev.entries.keys().zip(curr.entries.keys()).any(|(a, b)| a != b)
    {
        return Err(Error::KeyMismatch);
    }
    if curr.entries.is_empty() {
        return Ok(true);
    }
    let total: f64 = prev
        .entries
        .values()
        .zip(curr.entries.values())
        .map(|(p, c)| libm::fabs(c - p) / (libm::fabs(*c) + CHANGE_GUARD))
        .sum();
    Ok(total / (curr.entries.len() as f64) < threshold)
}

fn column(task: TaskId, players: &[PlayerId], values: impl Iterator<Item = f64>) -> ValueColumn {
    let mut c = ValueColumn::new(task, Provenance::Mc);
    c.entries = players.iter().copied().zip(values).collect();
    c
}

/// Permutation sampling of marginal contributions. With `truncate`, a
/// permutation's tail is skipped once the prefix utility is within
/// `truncation_tolerance` of the full-set utility.
pub fn permutation_mc<G: CoalitionGame + ?Sized>(
    game: &mut G,
    players: &Coalition,
    task: TaskId,
    cfg: &McConfig,
    truncate: bool,
) -> Result<EstimateReport> {
    cfg.validate()?;
    let before = game.trainings();
    let ids = players.members().to_vec();
    let n = ids.len();
    let mut evaluations = 0u64;
    let empty = game.value(&Coalition::empty())?;
    evaluations += 1;
    let full = if truncate && n > 0 {
        evaluations += 1;
        Some(game.value(players)?)
    } else {
        None
    };
    let mut sums = vec![0.0; n];
    let mut used = 0usize;
    let mut prev: Option<ValueColumn> = None;
    let mut order: Vec<usize> = (0..n).collect();
    while used < cfg.max_samples && n > 0 {
        let mut rng = stream(cfg.seed, used as u64);
        for (i, o) in order.iter_mut().enumerate() {
            *o = i;
        }
        order.shuffle(&mut rng);
        let mut prefix: Vec<PlayerId> = Vec::with_capacity(n);
        let mut last = empty;
        for &i in &order {
            if let Some(f) = full {
                if libm::fabs(last - f) < cfg.truncation_tolerance {
                    break;
                }
            }
            prefix.push(ids[i]);
            let s = Coalition::new(prefix.iter().copied())?;
            let v = game.value(&s)?;
            evaluations += 1;
            sums[i] += v - last;
            last = v;
        }
        used += 1;
        if used.is_multiple_of(cfg.check_interval) {
            let curr = column(task, &ids, sums.iter().map(|s| s / used as f64));
            if let Some(p) = &prev {
                if stopping_check(p, &curr, cfg.rel_change_stop)? {
                    break;
                }
            }
            prev = Some(curr);
        }
    }
    let denom = used.max(1) as f64;
    Ok(EstimateReport {
        column: column(task, &ids, sums.iter().map(|s| s / denom)),
        utility_evaluations: evaluations,
        trainings: game.trainings() - before,
        samples_used: used,
        wall_clock_seconds: 0.0,
    })
}

/// Complementary-contribution sampling. A sample draws a size `s` uniformly
/// from `1..=n` and a uniform coalition `S` of that size, and evaluates
/// `u = v(S) - v(N \ S)`. Members of `S` record `u` in stratum `s`, the others
/// record `-u` in stratum `n - s`; the estimate is the mean over strata of the
/// per-stratum averages.
pub fn complementary_mc<G: CoalitionGame + ?Sized>(
    game: &mut G,
    players: &Coalition,
    task: TaskId,
    cfg: &McConfig,
) -> Result<EstimateReport> {
    cfg.validate()?;
    let before = game.trainings();
    let ids = players.members().to_vec();
    let n = ids.len();
    let mut evaluations = 0u64;
    // sums[i][s], counts[i][s] for strata s = 1..=n
    let mut sums = vec![vec![0.0; n + 1]; n];
    let mut counts = vec![vec![0u32; n + 1]; n];
    let estimate = |sums: &[Vec<f64>], counts: &[Vec<u32>]| -> ValueColumn {
        column(
            task,
            &ids,
            (0..n).map(|i| {
                (1..=n)
                    .filter(|&s| counts[i][s] > 0)
                    .map(|s| sums[i][s] / counts[i][s] as f64)
                    .sum::<f64>()
                    / n as f64
            }),
        )
    };
    let mut used = 0usize;
    let mut prev: Option<ValueColumn> = None;
    let mut order: Vec<usize> = (0..n).collect();
    while used < cfg.max_samples && n > 0 {
        let mut rng = stream(cfg.seed, used as u64);
        let size = rng.random_range(1..=n);
        for (i, o) in order.iter_mut().enumerate() {
            *o = i;
        }
        order.shuffle(&mut rng);
        let (inside, outside) = order.split_at(size);
        let s = Coalition::new(inside.iter().map(|&i| ids[i]))?;
        let rest = Coalition::new(outside.iter().map(|&i| ids[i]))?;
        let u = game.value(&s)? - game.value(&rest)?;
        evaluations += 2;
        for &i in inside {
            sums[i][size] += u;
            counts[i][size] += 1;
        }
        for &i in outside {
            sums[i][n - size] -= u;
            counts[i][n - size] += 1;
        }
        used += 1;
        if used.is_multiple_of(cfg.check_interval) {
            let curr = estimate(&sums, &counts);
            if let Some(p) = &prev {
                if stopping_check(p, &curr, cfg.rel_change_stop)? {
                    break;
                }
            }
            prev = Some(curr);
        }
    }
    Ok(EstimateReport {
        column: estimate(&sums, &counts),
        utility_evaluations: evaluations,
        trainings: game.trainings() - before,
        samples_used: used,
        wall_clock_seconds: 0.0,
    })
}
