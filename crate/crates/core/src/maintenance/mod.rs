//! Incremental maintenance of the Shapley matrix.
//!
//! A [`Maintainer`] owns the game and the matrix. New tasks are interpolated
//! from nearby anchor columns or, when poorly covered, computed exactly and
//! appended as anchors. Player arrivals and departures recompute only the
//! exactly maintained columns whose support set changed; every other entry
//! is left untouched.

mod correction;
mod interpolate;

pub use correction::{monotone_correction, MonotoneCorrection};
pub use interpolate::{anchor_weights, interpolate, Interpolation, UsedAnchor, DISTANCE_GUARD};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::data::DataPoint;
use crate::error::{Error, Ident, Result};
use crate::estimators::{exact_local_shapley, permutation_mc, EstimateReport, McConfig, TaskGame, HARD_LIMIT};
use crate::ids::{Coalition, PlayerId, TaskId};
use crate::locality::{d_gamma, DistanceConfig};
use crate::matrix::{Provenance, ShapleyMatrix, ValueColumn};
use crate::models::{Game, ModelFamily, SupportSet};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MaintenanceConfig {
    /// Anchors combined per interpolated column.
    pub k_interp: usize,
    /// Coverage threshold: a task farther than this from every anchor
    /// becomes a new anchor.
    pub tau: f64,
    /// Support change above which a joint-batch task is computed exactly.
    pub kappa: usize,
    /// Exact enumeration budget; larger supports fall back to sampling.
    pub k_max: usize,
    pub distance: DistanceConfig,
    pub mc: McConfig,
}

impl Default for MaintenanceConfig {
    fn default() -> Self {
        MaintenanceConfig {
            k_interp: 6,
            tau: 1.0,
            kappa: 3,
            k_max: 20,
            distance: DistanceConfig::default(),
            mc: McConfig::default(),
        }
    }
}

impl MaintenanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_interp == 0 {
            return Err(Error::InvalidConfig("k_interp must be >= 1"));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidConfig("tau must be nonnegative"));
        }
        if self.k_max == 0 || self.k_max > HARD_LIMIT {
            return Err(Error::InvalidConfig("k_max must lie in 1..=25"));
        }
        self.distance.validate()?;
        self.mc.validate()
    }
}

/// Anchors in their fixed order, with the expansion threshold and
/// interpolation width.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorSet {
    pub tasks: Vec<TaskId>,
    pub tau: f64,
    pub k_interp: usize,
}

/// Outcome of a single player insertion, deletion or replacement.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlayerUpdateReport {
    /// Maintained columns whose support changed.
    pub affected_tasks: Vec<TaskId>,
    /// Utility queries issued, cache hits included.
    pub evaluations: u64,
    /// Models trained by this update.
    pub trainings: u64,
    /// `new - old` for players in both the old and the new support.
    pub corrections: BTreeMap<(PlayerId, TaskId), f64>,
    /// `|R| * 2^k_max`.
    pub bound: u64,
}

impl PlayerUpdateReport {
    fn merge(&mut self, other: PlayerUpdateReport, k_max: usize) {
        for t in other.affected_tasks {
            if !self.affected_tasks.contains(&t) {
                self.affected_tasks.push(t);
            }
        }
        self.evaluations += other.evaluations;
        self.trainings += other.trainings;
        self.corrections.extend(other.corrections);
        self.bound = self.affected_tasks.len() as u64 * (1u64 << k_max);
    }
}

/// How a new task column was filled.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskOutcome {
    Interpolated(Interpolation),
    /// Computed exactly (or by sampling) and appended as an anchor.
    Anchored(EstimateReport),
    /// Computed exactly but kept out of the anchor set.
    Exact(EstimateReport),
}

impl TaskOutcome {
    pub fn column(&self) -> &ValueColumn {
        match self {
            TaskOutcome::Interpolated(i) => &i.column,
            TaskOutcome::Anchored(r) | TaskOutcome::Exact(r) => &r.column,
        }
    }

    pub fn evaluations(&self) -> u64 {
        match self {
            TaskOutcome::Interpolated(_) => 0,
            TaskOutcome::Anchored(r) | TaskOutcome::Exact(r) => r.utility_evaluations,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum StreamEvent {
    TaskAdd { task: DataPoint },
    TaskDelete { task: TaskId },
    TaskReplace { old: TaskId, new: DataPoint },
    PlayerAdd { player: DataPoint },
    PlayerDelete { player: PlayerId },
    PlayerReplace { old: PlayerId, new: DataPoint },
    Joint { tasks: Vec<DataPoint>, players: Vec<DataPoint> },
}

impl StreamEvent {
    pub fn kind_name(&self) -> &'static str {
        match self {
            StreamEvent::TaskAdd { .. } => "task_add",
            StreamEvent::TaskDelete { .. } => "task_delete",
            StreamEvent::TaskReplace { .. } => "task_replace",
            StreamEvent::PlayerAdd { .. } => "player_add",
            StreamEvent::PlayerDelete { .. } => "player_delete",
            StreamEvent::PlayerReplace { .. } => "player_replace",
            StreamEvent::Joint { .. } => "joint",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointReport {
    pub players: PlayerUpdateReport,
    pub tasks: Vec<(TaskId, TaskOutcome)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventOutcome {
    Task(TaskId, TaskOutcome),
    TaskDeleted(TaskId),
    Player(PlayerUpdateReport),
    Joint(JointReport),
}

impl EventOutcome {
    pub fn evaluations(&self) -> u64 {
        match self {
            EventOutcome::Task(_, o) => o.evaluations(),
            EventOutcome::TaskDeleted(_) => 0,
            EventOutcome::Player(r) => r.evaluations,
            EventOutcome::Joint(j) => {
                j.players.evaluations + j.tasks.iter().map(|(_, o)| o.evaluations()).sum::<u64>()
            }
        }
    }
}

/// The update engine: a game, its matrix and the support sets of the
/// exactly maintained columns.
#[derive(Clone, Debug)]
pub struct Maintainer {
    game: Game,
    matrix: ShapleyMatrix,
    config: MaintenanceConfig,
    supports: BTreeMap<TaskId, Coalition>,
}

impl Maintainer {
    /// An engine with one row per active player and no columns.
    pub fn new(game: Game, config: MaintenanceConfig) -> Result<Self> {
        let players: Vec<PlayerId> = game.universe().iter().copied().collect();
        Self::from_matrix(game, ShapleyMatrix::new(players)?, config)
    }

    /// Adopts an existing matrix whose anchor columns are local games over
    /// the current supports (for instance a support-restricted self matrix).
    pub fn from_matrix(mut game: Game, mut matrix: ShapleyMatrix, config: MaintenanceConfig) -> Result<Self> {
        config.validate()?;
        let rows: BTreeSet<PlayerId> = matrix.players().iter().copied().collect();
        if &rows != game.universe() {
            return Err(Error::UniverseMismatch);
        }
        if matches!(game.family(), ModelFamily::DecisionTree { .. }) && !game.is_fitted() {
            game.fit()?;
        }
        let mut supports = BTreeMap::new();
        for a in matrix.anchor_order().to_vec() {
            if !game.has_task(a) {
                match matrix.proxy_of(a).or(Some(PlayerId(a.0)).filter(|p| rows.contains(p))) {
                    Some(p) => {
                        game.add_proxy_task(p)?;
                    }
                    None => return Err(Error::NotFound(Ident::Task(a))),
                }
            }
            supports.insert(a, game.support(a)?.members);
        }
        for p in matrix.players().to_vec() {
            let label = game.player(p)?.label;
            matrix.set_player_label(p, label);
        }
        Ok(Maintainer {
            game,
            matrix,
            config,
            supports,
        })
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn game_mut(&mut self) -> &mut Game {
        &mut self.game
    }

    pub fn matrix(&self) -> &ShapleyMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ShapleyMatrix {
        self.matrix
    }

    pub fn config(&self) -> &MaintenanceConfig {
        &self.config
    }

    pub fn anchors(&self) -> AnchorSet {
        AnchorSet {
            tasks: self.matrix.anchor_order().to_vec(),
            tau: self.config.tau,
            k_interp: self.config.k_interp,
        }
    }

    /// Columns kept exact under player updates, with their recorded supports.
    pub fn maintained(&self) -> &BTreeMap<TaskId, Coalition> {
        &self.supports
    }

    /// Values the local game of `t` over `support`: exactly within the
    /// budget, by permutation sampling beyond it.
    fn local_values(&mut self, t: TaskId, support: &SupportSet) -> Result<EstimateReport> {
        if support.members.len() <= self.config.k_max {
            exact_local_shapley(&mut self.game, support, t, self.config.k_max)
        } else {
            let mut r = permutation_mc(
                &mut TaskGame::new(&mut self.game, t),
                &support.members,
                t,
                &self.config.mc,
                false,
            )?;
            r.column.provenance = Provenance::Mc;
            Ok(r)
        }
    }

    /// Distances from task `t` to every anchor, in anchor order.
    pub fn anchor_distances(&self, t: TaskId) -> Result<Vec<(TaskId, f64)>> {
        let cfg = &self.config.distance;
        let profile = self.game.profile_with(t, cfg)?;
        self.matrix
            .anchor_order()
            .iter()
            .map(|a| {
                let q = self.game.profile_with(*a, cfg)?;
                Ok((*a, d_gamma(&profile, &q, cfg)?))
            })
            .collect()
    }

    fn register_task(&mut self, point: DataPoint) -> Result<TaskId> {
        let t = TaskId(point.id);
        if self.matrix.has_task(t) {
            return Err(Error::AlreadyExists(Ident::Task(t)));
        }
        let label = point.label;
        self.game.add_task(point)?;
        self.matrix.set_task_label(t, label);
        Ok(t)
    }

    fn append_exact(&mut self, t: TaskId, as_anchor: bool) -> Result<EstimateReport> {
        let support = self.game.support(t)?;
        let report = self.local_values(t, &support)?;
        match self.game.proxy_player(t).filter(|p| self.matrix.has_player(*p)) {
            Some(p) => self.matrix.append_proxy_column(&report.column, as_anchor, p)?,
            None => self.matrix.append_column(&report.column, as_anchor)?,
        }
        self.supports.insert(t, support.members);
        Ok(report)
    }

    /// Registers an external task, computes its column exactly and appends
    /// it as an anchor.
    pub fn add_anchor(&mut self, point: DataPoint) -> Result<EstimateReport> {
        let t = self.register_task(point)?;
        self.append_exact(t, true)
    }

    /// Interpolates a new task from its nearest label-compatible anchors.
    /// The task is not registered when no compatible anchor exists.
    pub fn task_update(&mut self, point: DataPoint) -> Result<Interpolation> {
        let t = self.register_task(point)?;
        let result = self
            .anchor_distances(t)
            .and_then(|d| interpolate(&self.matrix, t, &d, self.config.k_interp));
        match result {
            Ok(i) => {
                self.matrix.append_column(&i.column, false)?;
                Ok(i)
            }
            Err(e) => {
                self.game.remove_task(t)?;
                Err(e)
            }
        }
    }

    /// Adds a task, expanding the anchor set when it is farther than `tau`
    /// from every anchor, and interpolating otherwise.
    pub fn anchor_expansion(&mut self, point: DataPoint) -> Result<TaskOutcome> {
        let t = self.register_task(point)?;
        let distances = self.anchor_distances(t)?;
        let nearest = distances.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        if nearest > self.config.tau {
            return Ok(TaskOutcome::Anchored(self.append_exact(t, true)?));
        }
        let i = interpolate(&self.matrix, t, &distances, self.config.k_interp)?;
        self.matrix.append_column(&i.column, false)?;
        Ok(TaskOutcome::Interpolated(i))
    }

    pub fn delete_task(&mut self, t: TaskId) -> Result<()> {
        self.matrix.remove_column(t)?;
        self.supports.remove(&t);
        if self.game.has_task(t) && self.game.proxy_player(t).is_none() {
            self.game.remove_task(t)?;
        }
        Ok(())
    }

    pub fn replace_task(&mut self, old: TaskId, new: DataPoint) -> Result<TaskOutcome> {
        self.delete_task(old)?;
        self.anchor_expansion(new)
    }

    /// Rewrites every maintained column whose support differs from the
    /// recorded one. `skip` is a player with no row (just deleted).
    fn refresh_supports(&mut self, skip: Option<PlayerId>) -> Result<PlayerUpdateReport> {
        let trainings_before = self.game.trainings();
        let mut report = PlayerUpdateReport::default();
        let tasks: Vec<TaskId> = self
            .matrix
            .tasks()
            .filter(|t| self.supports.contains_key(t))
            .collect();
        for t in tasks {
            let fresh = self.game.support(t)?;
            let old = self.supports[&t].clone();
            if fresh.members == old {
                continue;
            }
            let r = self.local_values(t, &fresh)?;
            report.evaluations += r.utility_evaluations;
            let touched: BTreeSet<PlayerId> = old.iter().chain(fresh.members.iter()).collect();
            for p in touched {
                if Some(p) == skip || !self.matrix.has_player(p) {
                    continue;
                }
                let before = self.matrix.get(p, t)?;
                let value = r.column.get(p);
                if let Some(b) = before {
                    if old.contains(p) && fresh.members.contains(p) {
                        report.corrections.insert((p, t), value - b);
                    }
                }
                self.matrix.set(p, t, value)?;
            }
            self.supports.insert(t, fresh.members);
            report.affected_tasks.push(t);
        }
        report.trainings = self.game.trainings() - trainings_before;
        report.bound = report.affected_tasks.len() as u64 * (1u64 << self.config.k_max);
        Ok(report)
    }

    /// Inserts a player: appends a zero row, then recomputes the local games
    /// of the maintained columns whose support changed.
    pub fn player_update(&mut self, point: DataPoint) -> Result<PlayerUpdateReport> {
        let p = PlayerId(point.id);
        if self.matrix.has_player(p) {
            return Err(Error::AlreadyExists(Ident::Player(p)));
        }
        let label = point.label;
        self.game.add_player(point)?;
        self.matrix.append_row(p)?;
        self.matrix.set_player_label(p, label);
        self.refresh_supports(None)
    }

    /// Removes a player's row and recomputes the maintained columns whose
    /// support lost or gained members.
    pub fn delete_player(&mut self, p: PlayerId) -> Result<PlayerUpdateReport> {
        self.matrix.row_index(p)?;
        self.game.remove_player(p)?;
        self.matrix.remove_row(p)?;
        self.refresh_supports(Some(p))
    }

    pub fn replace_player(&mut self, old: PlayerId, new: DataPoint) -> Result<PlayerUpdateReport> {
        let mut report = self.delete_player(old)?;
        let added = self.player_update(new)?;
        report.merge(added, self.config.k_max);
        Ok(report)
    }

    /// Applies a batch: all player insertions first, then each new task is
    /// computed exactly when it is farther than `tau` from every anchor
    /// (becoming an anchor) or its support changed by more than `kappa`
    /// players during the batch, and interpolated otherwise.
    pub fn joint_update(&mut self, tasks: Vec<DataPoint>, players: Vec<DataPoint>) -> Result<JointReport> {
        let mut before = Vec::with_capacity(tasks.len());
        for point in tasks {
            let t = self.register_task(point)?;
            before.push((t, self.game.support(t)?.members));
        }
        let mut player_report = PlayerUpdateReport::default();
        for point in players {
            let r = self.player_update(point)?;
            player_report.merge(r, self.config.k_max);
        }
        let mut outcomes = Vec::with_capacity(before.len());
        for (t, old) in before {
            let distances = self.anchor_distances(t)?;
            let nearest = distances.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
            let outcome = if nearest > self.config.tau {
                TaskOutcome::Anchored(self.append_exact(t, true)?)
            } else if self.game.support(t)?.members.symmetric_difference_len(&old) > self.config.kappa {
                TaskOutcome::Exact(self.append_exact(t, false)?)
            } else {
                let i = interpolate(&self.matrix, t, &distances, self.config.k_interp)?;
                self.matrix.append_column(&i.column, false)?;
                TaskOutcome::Interpolated(i)
            };
            outcomes.push((t, outcome));
        }
        Ok(JointReport {
            players: player_report,
            tasks: outcomes,
        })
    }

    pub fn apply(&mut self, event: StreamEvent) -> Result<EventOutcome> {
        Ok(match event {
            StreamEvent::TaskAdd { task } => {
                let t = TaskId(task.id);
                EventOutcome::Task(t, self.anchor_expansion(task)?)
            }
            StreamEvent::TaskDelete { task } => {
                self.delete_task(task)?;
                EventOutcome::TaskDeleted(task)
            }
            StreamEvent::TaskReplace { old, new } => {
                let t = TaskId(new.id);
                EventOutcome::Task(t, self.replace_task(old, new)?)
            }
            StreamEvent::PlayerAdd { player } => EventOutcome::Player(self.player_update(player)?),
            StreamEvent::PlayerDelete { player } => EventOutcome::Player(self.delete_player(player)?),
            StreamEvent::PlayerReplace { old, new } => {
                EventOutcome::Player(self.replace_player(old, new)?)
            }
            StreamEvent::Joint { tasks, players } => EventOutcome::Joint(self.joint_update(tasks, players)?),
        })
    }
}
