//! Self-valuation: every player doubles as a leave-one-out proxy task.
//!
//! The matrix has one column per anchor player `a`, holding the Shapley
//! values of the game `S -> v_a(S)` over `D \ {a}`; the cell of `a` itself
//! is ABSENT. In the shared schedules a coalition is trained once and its
//! utility credited to every anchor game it belongs to.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;

use crate::combin::{binomial_row, bits};
use crate::error::{Error, Ident, Result};
use crate::estimators::{
    exact_local_shapley, exact_shapley, permutation_mc, stopping_check, McConfig, TaskGame,
};
use crate::ids::{Coalition, PlayerId, TaskId};
use crate::locality::{d_gamma, DistanceConfig};
use crate::matrix::{Provenance, ShapleyMatrix, ValueColumn};
use crate::models::{Game, SupportProfile};
use crate::rng::stream;

/// Largest universe enumerated by the exact schedules.
pub const EXACT_LIMIT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BuildMode {
    /// All coalitions, each trained once and credited to every anchor game.
    ExactShared,
    /// Sampled coalitions credited to every anchor game.
    McShared,
    /// Independent enumeration per anchor without a shared cache.
    Naive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildConfig {
    pub mode: BuildMode,
    /// Value each anchor on its support set within `D \ {a}` instead of the
    /// whole of `D \ {a}`.
    pub restrict_to_support: bool,
    /// Exact budget for support-restricted games.
    pub k_max: usize,
    pub mc: McConfig,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            mode: BuildMode::ExactShared,
            restrict_to_support: false,
            k_max: 20,
            mc: McConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildReport {
    pub n: usize,
    pub k: usize,
    pub mode: BuildMode,
    pub restricted: bool,
    pub trainings: u64,
    pub utility_evaluations: u64,
    pub samples_used: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub r_max: f64,
    /// The point attaining `r_max`; `None` when there are no points.
    pub argmax: Option<PlayerId>,
    /// Distance from each point to its nearest anchor.
    pub nearest: BTreeMap<PlayerId, f64>,
}

/// The first anchor of `order` outside `s`, where the model of `s` is trained.
pub fn pivot(order: &[PlayerId], s: &Coalition) -> Option<PlayerId> {
    order.iter().copied().find(|a| !s.contains(*a))
}

/// `max_z min_a d(z, a)` over `points`.
pub fn covering_radius<D>(points: &[PlayerId], anchors: &[PlayerId], mut d: D) -> Result<CoverageReport>
where
    D: FnMut(PlayerId, PlayerId) -> Result<f64>,
{
    if anchors.is_empty() {
        return Err(Error::InvalidBudget {
            k: 0,
            n: points.len(),
        });
    }
    let mut nearest = BTreeMap::new();
    let mut best: Option<(PlayerId, f64)> = None;
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    for z in sorted {
        let mut m = f64::INFINITY;
        for a in anchors {
            let v = if *a == z { 0.0 } else { d(z, *a)? };
            m = m.min(v);
        }
        nearest.insert(z, m);
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((z, m));
        }
    }
    Ok(CoverageReport {
        r_max: best.map_or(0.0, |b| b.1),
        argmax: best.map(|b| b.0),
        nearest,
    })
}

/// Greedy k-center from the lowest id: each step adds the point farthest
/// from the chosen anchors, ties to the lowest id.
pub fn select_anchors_fps<D>(points: &[PlayerId], k: usize, d: D) -> Result<(Vec<PlayerId>, CoverageReport)>
where
    D: FnMut(PlayerId, PlayerId) -> Result<f64>,
{
    let first = points.iter().min().copied();
    select_anchors_fps_from(points, k, first.unwrap_or(PlayerId(0)), d)
}

/// Greedy k-center starting from `seed`.
pub fn select_anchors_fps_from<D>(
    points: &[PlayerId],
    k: usize,
    seed: PlayerId,
    mut d: D,
) -> Result<(Vec<PlayerId>, CoverageReport)>
where
    D: FnMut(PlayerId, PlayerId) -> Result<f64>,
{
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { k, n });
    }
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    if !sorted.contains(&seed) {
        return Err(Error::NotFound(Ident::Player(seed)));
    }
    let mut anchors = vec![seed];
    let mut nearest: Vec<f64> = sorted
        .iter()
        .map(|z| if *z == seed { Ok(0.0) } else { d(*z, seed) })
        .collect::<Result<_>>()?;
    while anchors.len() < k {
        let mut pick: Option<(usize, f64)> = None;
        for (i, z) in sorted.iter().enumerate() {
            if anchors.contains(z) {
                continue;
            }
            if pick.is_none_or(|(_, b)| nearest[i] > b) {
                pick = Some((i, nearest[i]));
            }
        }
        let a = sorted[pick.expect("k <= n leaves a candidate").0];
        anchors.push(a);
        for (i, z) in sorted.iter().enumerate() {
            let v = if *z == a { 0.0 } else { d(*z, a)? };
            nearest[i] = nearest[i].min(v);
        }
    }
    let report = covering_radius(&sorted, &anchors, d)?;
    Ok((anchors, report))
}

/// Registers the proxy task of every active player and returns its profile.
pub fn proxy_profiles(game: &mut Game, cfg: &DistanceConfig) -> Result<BTreeMap<PlayerId, SupportProfile>> {
    let players: Vec<PlayerId> = game.universe().iter().copied().collect();
    for p in &players {
        game.add_proxy_task(*p)?;
    }
    players
        .into_iter()
        .map(|p| Ok((p, game.profile_with(p.proxy_task(), cfg)?)))
        .collect()
}

/// Distance closure over proxy profiles for anchor selection.
pub fn proxy_distance<'a>(
    profiles: &'a BTreeMap<PlayerId, SupportProfile>,
    cfg: &'a DistanceConfig,
) -> impl FnMut(PlayerId, PlayerId) -> Result<f64> + 'a {
    move |a, b| {
        let p = profiles.get(&a).ok_or(Error::NotFound(Ident::Player(a)))?;
        let q = profiles.get(&b).ok_or(Error::NotFound(Ident::Player(b)))?;
        d_gamma(p, q, cfg)
    }
}

/// Builds the self-valuation matrix with one anchor column per entry of
/// `anchors`, in that order.
pub fn build_self_matrix(
    game: &mut Game,
    anchors: &[PlayerId],
    cfg: &BuildConfig,
) -> Result<(ShapleyMatrix, BuildReport)> {
    let players: Vec<PlayerId> = game.universe().iter().copied().collect();
    let n = players.len();
    let k = anchors.len();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { k, n });
    }
    let mut index = BTreeMap::new();
    for a in anchors {
        let i = players
            .binary_search(a)
            .map_err(|_| Error::NotFound(Ident::Player(*a)))?;
        if index.insert(*a, i).is_some() {
            return Err(Error::DuplicateMember(*a));
        }
        game.add_proxy_task(*a)?;
    }
    let trainings_before = game.trainings();
    let mut report = BuildReport {
        n,
        k,
        mode: cfg.mode,
        restricted: cfg.restrict_to_support,
        trainings: 0,
        utility_evaluations: 0,
        samples_used: 0,
    };
    let columns = if cfg.restrict_to_support {
        restricted_columns(game, anchors, cfg, &mut report)?
    } else {
        match cfg.mode {
            BuildMode::ExactShared => exact_shared(game, &players, anchors, &mut report)?,
            BuildMode::Naive => naive(game, &players, anchors, &mut report)?,
            BuildMode::McShared => mc_shared(game, &players, anchors, &cfg.mc, &mut report)?,
        }
    };
    report.trainings = game.trainings() - trainings_before;
    let mut matrix = ShapleyMatrix::new(players.iter().copied())?;
    for p in &players {
        matrix.set_player_label(*p, game.player(*p)?.label);
    }
    for (a, col) in anchors.iter().zip(columns) {
        matrix.append_proxy_column(&col, true, *a)?;
        matrix.set_task_label(a.proxy_task(), game.player(*a)?.label);
    }
    Ok((matrix, report))
}

fn restricted_columns(
    game: &mut Game,
    anchors: &[PlayerId],
    cfg: &BuildConfig,
    report: &mut BuildReport,
) -> Result<Vec<ValueColumn>> {
    let cache = game.config().cache;
    if cfg.mode == BuildMode::Naive {
        game.set_cache(false);
    }
    let mut out = Vec::with_capacity(anchors.len());
    for a in anchors {
        let t = a.proxy_task();
        let support = game.support(t)?;
        let r = if support.members.len() <= cfg.k_max && cfg.mode != BuildMode::McShared {
            exact_local_shapley(game, &support, t, cfg.k_max)?
        } else {
            let mc = McConfig {
                seed: cfg.mc.seed ^ u64::from(a.0),
                ..cfg.mc.clone()
            };
            permutation_mc(&mut TaskGame::new(game, t), &support.members, t, &mc, false)?
        };
        report.utility_evaluations += r.utility_evaluations;
        report.samples_used += r.samples_used;
        out.push(r.column);
    }
    game.set_cache(cache);
    Ok(out)
}

fn check_exact(n: usize) -> Result<()> {
    if n > EXACT_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: EXACT_LIMIT,
        });
    }
    Ok(())
}

/// Weights `(1/(m C(m-1, s-1)), 1/(m C(m-1, s)))` of a game with `m` players.
fn credit_weights(m: usize) -> (Vec<f64>, Vec<f64>) {
    let row = binomial_row(m.saturating_sub(1));
    let mf = m as f64;
    let plus = (0..=m)
        .map(|s| if s == 0 { 0.0 } else { 1.0 / (mf * row[s - 1]) })
        .collect();
    let minus = (0..=m)
        .map(|s| if s == m { 0.0 } else { 1.0 / (mf * row[s]) })
        .collect();
    (plus, minus)
}

fn exact_shared(
    game: &mut Game,
    players: &[PlayerId],
    anchors: &[PlayerId],
    report: &mut BuildReport,
) -> Result<Vec<ValueColumn>> {
    let n = players.len();
    check_exact(n)?;
    let everyone = Coalition::new(players.iter().copied())?;
    let anchor_bits: Vec<u64> = anchors
        .iter()
        .map(|a| 1u64 << players.binary_search(a).unwrap())
        .collect();
    let anchor_mask = anchor_bits.iter().fold(0, |m, b| m | b);
    let (plus, minus) = credit_weights(n - 1);
    let full = (1u64 << n) - 1;
    let mut phi = vec![vec![0.0; n]; anchors.len()];
    let mut open: Vec<usize> = Vec::with_capacity(anchors.len());
    let mut tasks: Vec<TaskId> = Vec::with_capacity(anchors.len());
    for mask in 0..=full {
        if mask & anchor_mask == anchor_mask {
            continue;
        }
        open.clear();
        tasks.clear();
        for (j, b) in anchor_bits.iter().enumerate() {
            if mask & b == 0 {
                open.push(j);
                tasks.push(anchors[j].proxy_task());
            }
        }
        let s = everyone.subset(mask);
        let values = game.utilities(&s, &tasks)?;
        report.utility_evaluations += values.len() as u64;
        let size = s.len();
        for (&j, v) in open.iter().zip(values) {
            let (wp, wm) = (v * plus[size], v * minus[size]);
            let col = &mut phi[j];
            for i in bits(mask) {
                col[i] += wp;
            }
            for i in bits(full & !mask & !anchor_bits[j]) {
                col[i] -= wm;
            }
        }
    }
    Ok(anchors
        .iter()
        .zip(phi)
        .map(|(a, col)| {
            let mut c = ValueColumn::new(a.proxy_task(), Provenance::ExactLocal);
            c.entries = players
                .iter()
                .copied()
                .zip(col)
                .filter(|(p, _)| p != a)
                .collect();
            c
        })
        .collect())
}

fn naive(
    game: &mut Game,
    players: &[PlayerId],
    anchors: &[PlayerId],
    report: &mut BuildReport,
) -> Result<Vec<ValueColumn>> {
    check_exact(players.len())?;
    let cache = game.config().cache;
    game.set_cache(false);
    let everyone = Coalition::new(players.iter().copied())?;
    let mut out = Vec::with_capacity(anchors.len());
    for a in anchors {
        let t = a.proxy_task();
        let r = exact_shapley(&mut TaskGame::new(game, t), &everyone.without(*a), t);
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                game.set_cache(cache);
                return Err(e);
            }
        };
        report.utility_evaluations += r.utility_evaluations;
        out.push(r.column);
    }
    game.set_cache(cache);
    Ok(out)
}

/// Running stratified means of one anchor game: for each player and size
/// `s`, the mean utility of sampled coalitions of size `s` without the
/// player, and of size `s + 1` with it.
struct StrataColumn {
    with_sum: Vec<Vec<f64>>,
    with_count: Vec<Vec<u32>>,
    without_sum: Vec<Vec<f64>>,
    without_count: Vec<Vec<u32>>,
    previous: Option<ValueColumn>,
    done: bool,
}

impl StrataColumn {
    fn new(n: usize) -> Self {
        StrataColumn {
            with_sum: vec![vec![0.0; n]; n],
            with_count: vec![vec![0; n]; n],
            without_sum: vec![vec![0.0; n]; n],
            without_count: vec![vec![0; n]; n],
            previous: None,
            done: false,
        }
    }

    fn estimate(&self, task: TaskId, players: &[PlayerId], own: usize) -> ValueColumn {
        let m = players.len() - 1;
        let mut c = ValueColumn::new(task, Provenance::Mc);
        for (i, p) in players.iter().enumerate() {
            if i == own {
                continue;
            }
            let mut total = 0.0;
            for s in 0..m {
                let (wc, oc) = (self.with_count[i][s], self.without_count[i][s]);
                if wc > 0 && oc > 0 {
                    total += self.with_sum[i][s] / wc as f64 - self.without_sum[i][s] / oc as f64;
                }
            }
            c.entries.insert(*p, total / m as f64);
        }
        c
    }
}

fn mc_shared(
    game: &mut Game,
    players: &[PlayerId],
    anchors: &[PlayerId],
    mc: &McConfig,
    report: &mut BuildReport,
) -> Result<Vec<ValueColumn>> {
    mc.validate()?;
    let n = players.len();
    if n < 2 {
        return Err(Error::InvalidBudget { k: anchors.len(), n });
    }
    let everyone = Coalition::new(players.iter().copied())?;
    let own: Vec<usize> = anchors
        .iter()
        .map(|a| players.binary_search(a).unwrap())
        .collect();
    let mut cols: Vec<StrataColumn> = anchors.iter().map(|_| StrataColumn::new(n)).collect();
    let mut used = 0usize;
    let mut member = vec![false; n];
    while used < mc.max_samples && cols.iter().any(|c| !c.done) {
        let mut rng = stream(mc.seed, used as u64);
        let size = rng.random_range(0..n);
        let chosen = sample(&mut rng, n, size).into_vec();
        let mut mask = 0u64;
        member.iter_mut().for_each(|m| *m = false);
        for &i in &chosen {
            mask |= 1 << i;
            member[i] = true;
        }
        let open: Vec<usize> = (0..anchors.len())
            .filter(|&j| !member[own[j]] && !cols[j].done)
            .collect();
        if !open.is_empty() {
            let tasks: Vec<TaskId> = open.iter().map(|&j| anchors[j].proxy_task()).collect();
            let s = everyone.subset(mask);
            let values = game.utilities(&s, &tasks)?;
            report.utility_evaluations += values.len() as u64;
            for (&j, v) in open.iter().zip(values) {
                let col = &mut cols[j];
                for i in 0..n {
                    if i == own[j] {
                        continue;
                    }
                    if member[i] {
                        col.with_sum[i][size - 1] += v;
                        col.with_count[i][size - 1] += 1;
                    } else {
                        col.without_sum[i][size] += v;
                        col.without_count[i][size] += 1;
                    }
                }
            }
        }
        used += 1;
        if used.is_multiple_of(mc.check_interval) {
            for (j, col) in cols.iter_mut().enumerate() {
                if col.done {
                    continue;
                }
                let curr = col.estimate(anchors[j].proxy_task(), players, own[j]);
                if let Some(p) = &col.previous {
                    if stopping_check(p, &curr, mc.rel_change_stop)? {
                        col.done = true;
                    }
                }
                col.previous = Some(curr);
            }
        }
    }
    report.samples_used = used;
    Ok(cols
        .iter()
        .enumerate()
        .map(|(j, c)| c.estimate(anchors[j].proxy_task(), players, own[j]))
        .collect())
}
