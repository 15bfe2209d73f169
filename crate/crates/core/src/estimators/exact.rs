use alloc::vec;

use super::{CoalitionGame, EstimateReport, TaskGame};
use crate::combin::{binomial_row, bits};
use crate::error::{Error, Result};
use crate::ids::{Coalition, TaskId};
use crate::matrix::{Provenance, ValueColumn};
use crate::models::{Game, SupportSet};

/// Largest player set ever enumerated exactly.
pub const HARD_LIMIT: usize = 25;

/// Exact Shapley values of `players` by one pass over all subsets.
///
/// Each coalition `S` is evaluated once and credited to every player: a
/// member gets `+v(S) / (k C(k-1, |S|-1))`, a non-member
/// `-v(S) / (k C(k-1, |S|))`.
pub fn exact_shapley<G: CoalitionGame + ?Sized>(
    game: &mut G,
    players: &Coalition,
    task: TaskId,
) -> Result<EstimateReport> {
    let k = players.len();
    if k > HARD_LIMIT {
        return Err(Error::SupportTooLarge {
            size: k,
            limit: HARD_LIMIT,
        });
    }
    let before = game.trainings();
    let mut phi = vec![0.0; k];
    let mut evaluations = 0u64;
    if k == 0 {
        game.value(players)?;
        evaluations = 1;
    } else {
        let row = binomial_row(k - 1);
        let kf = k as f64;
        let plus: alloc::vec::Vec<f64> = (0..=k)
            .map(|s| if s == 0 { 0.0 } else { 1.0 / (kf * row[s - 1]) })
            .collect();
        let minus: alloc::vec::Vec<f64> = (0..=k)
            .map(|s| if s == k { 0.0 } else { 1.0 / (kf * row[s]) })
            .collect();
        let full = (1u64 << k) - 1;
        for mask in 0..=full {
            let s = players.subset(mask);
            let v = game.value(&s)?;
            evaluations += 1;
            let size = s.len();
            let (wp, wm) = (v * plus[size], v * minus[size]);
            for i in bits(mask) {
                phi[i] += wp;
            }
            for i in bits(full & !mask) {
                phi[i] -= wm;
            }
        }
    }
    let mut column = ValueColumn::new(task, Provenance::ExactLocal);
    column.entries = players.iter().zip(phi).collect();
    Ok(EstimateReport {
        column,
        utility_evaluations: evaluations,
        trainings: game.trainings() - before,
        samples_used: 0,
        wall_clock_seconds: 0.0,
    })
}

/// Exact values of the local game of `t` over its support; players outside
/// the support are implicitly zero. `limit` is the configured exact budget.
pub fn exact_local_shapley(
    game: &mut Game,
    support: &SupportSet,
    t: TaskId,
    limit: usize,
) -> Result<EstimateReport> {
    let size = support.members.len();
    let limit = limit.min(HARD_LIMIT);
    if size > limit {
        return Err(Error::SupportTooLarge { size, limit });
    }
    exact_shapley(&mut TaskGame::new(game, t), &support.members, t)
}
