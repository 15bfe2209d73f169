//! The streaming experiment: build a self-valuation matrix over the initial
//! players, replay held-out points as events, and compare the maintained
//! matrix with a reference recomputed over the same final universe.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use shapmat_core::estimators::{
    complementary_mc, exact_local_shapley, permutation_mc, EstimateReport, McConfig, TaskGame,
};
use shapmat_core::maintenance::{EventOutcome, Maintainer, StreamEvent};
use shapmat_core::models::{Game, GameConfig, ModelFamily};
use shapmat_core::selfval::{
    build_self_matrix, proxy_distance, proxy_profiles, select_anchors_fps, BuildConfig, BuildMode,
};
use shapmat_core::{DataPoint, Graph, PlayerId, Provenance, ShapleyMatrix, TaskId};

use crate::config::{DataSource, EventOrder, ExperimentConfig, MetricScope, ReferenceMode};
use crate::dataset;
use crate::error::{HarnessError, Result};
use crate::events::{EventLog, EventRecord};
use crate::metadata::{save_with_sidecar, write_json, Sidecar};
use crate::metrics::{metrics_over, MetricsReport};
use crate::synth;

/// Initial players, the event stream and the optional graph.
#[derive(Clone, Debug)]
pub struct Plan {
    pub initial: Vec<DataPoint>,
    pub events: Vec<StreamEvent>,
    pub graph: Option<Graph>,
    pub num_classes: u32,
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<(Vec<DataPoint>, Option<Graph>)> {
    match &cfg.data {
        DataSource::Blobs(spec) => Ok((synth::blobs(spec, cfg.seed)?, None)),
        DataSource::Ring {
            nodes,
            classes,
            chords,
        } => {
            let (points, g) = synth::ring(*nodes, *classes, *chords, cfg.seed)?;
            Ok((points, Some(g)))
        }
        DataSource::Files { points, graph } => {
            let pts = dataset::load_points(points)?;
            let g = graph.as_deref().map(dataset::load_edges).transpose()?;
            Ok((pts, g))
        }
    }
}

fn count(n: usize, fixed: usize, fraction: Option<f64>) -> usize {
    fraction.map_or(fixed, |f| (f * n as f64).round() as usize)
}

/// Splits the dataset with a seeded shuffle and lays out the events.
pub fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    let (mut points, graph) = load_data(cfg)?;
    let num_classes = points.iter().map(|p| p.label + 1).max().unwrap_or(1).max(2);
    let n = points.len();
    let s = &cfg.stream;
    let tasks = count(n, s.tasks, s.task_fraction);
    let players = count(n, s.players, s.player_fraction);
    let held = tasks + players + s.player_replaces;
    if held >= n {
        return Err(HarnessError::Config(format!("{held} held-out points leave no initial players out of {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    points.shuffle(&mut rng);
    let mut rest = points.split_off(held);
    if let Some(k) = s.initial {
        if k == 0 || k > rest.len() {
            return Err(HarnessError::Config(format!("stream.initial = {k} but only {} points remain", rest.len())));
        }
        rest.truncate(k);
    }
    rest.sort_by_key(|p| p.id);
    let mut pool = points.into_iter();
    let task_events: Vec<StreamEvent> = pool
        .by_ref()
        .take(tasks)
        .map(|task| StreamEvent::TaskAdd { task })
        .collect();
    let mut player_events: Vec<StreamEvent> = pool
        .by_ref()
        .take(players)
        .map(|player| StreamEvent::PlayerAdd { player })
        .collect();
    let changes = s.player_deletes + s.player_replaces;
    if changes > rest.len() {
        return Err(HarnessError::Config("more deletions and replacements than initial players".into()));
    }
    let mut targets: Vec<PlayerId> = rest.iter().map(|p| PlayerId(p.id)).collect();
    targets.shuffle(&mut rng);
    let mut targets = targets.into_iter();
    player_events.extend(
        targets
            .by_ref()
            .take(s.player_deletes)
            .map(|player| StreamEvent::PlayerDelete { player }),
    );
    player_events.extend(
        targets
            .zip(pool)
            .take(s.player_replaces)
            .map(|(old, new)| StreamEvent::PlayerReplace { old, new }),
    );
    player_events.shuffle(&mut rng);
    let events = match s.order {
        EventOrder::TasksFirst => task_events.into_iter().chain(player_events).collect(),
        EventOrder::PlayersFirst => player_events.into_iter().chain(task_events).collect(),
        EventOrder::Interleaved => {
            let mut all: Vec<StreamEvent> = task_events.into_iter().chain(player_events).collect();
            all.shuffle(&mut rng);
            all
        }
    };
    Ok(Plan {
        initial: rest,
        events,
        graph,
        num_classes,
    })
}

pub fn game_config(cfg: &ExperimentConfig, num_classes: u32) -> GameConfig {
    let mut g = GameConfig::new(cfg.model.family.clone(), cfg.model.utility, num_classes);
    g.support_cap = cfg.model.support_cap;
    g
}

pub fn new_game(cfg: &ExperimentConfig, plan: &Plan) -> Result<Game> {
    let mut game = Game::new(game_config(cfg, plan.num_classes), plan.initial.iter().cloned())?;
    if let Some(g) = &plan.graph {
        game.attach_graph(g.clone());
    }
    if matches!(cfg.model.family, ModelFamily::DecisionTree { .. }) {
        game.fit()?;
    }
    Ok(game)
}

pub fn anchor_budget(cfg: &ExperimentConfig, n: usize) -> usize {
    match (cfg.anchors.count, cfg.anchors.ratio) {
        (Some(k), _) => k,
        (None, Some(r)) => ((r * n as f64).round() as usize).max(1),
        (None, None) => n.div_ceil(2),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub n: usize,
    pub k: usize,
    pub mode: BuildMode,
    pub restricted: bool,
    pub trainings: u64,
    pub utility_evaluations: u64,
    pub samples_used: usize,
    pub wall_clock_seconds: f64,
    pub r_max: f64,
    pub anchors: Vec<u32>,
}

/// Selects anchors by farthest-point sampling and builds the self matrix.
pub fn build(cfg: &ExperimentConfig, plan: &Plan) -> Result<(Maintainer, BuildSummary)> {
    let started = Instant::now();
    let mut game = new_game(cfg, plan)?;
    let dist = &cfg.maintenance.distance;
    let profiles = proxy_profiles(&mut game, dist)?;
    let players: Vec<PlayerId> = game.universe().iter().copied().collect();
    let k = anchor_budget(cfg, players.len());
    let (anchors, coverage) = select_anchors_fps(&players, k, proxy_distance(&profiles, dist))?;
    let bcfg = BuildConfig {
        mode: cfg.build.mode,
        restrict_to_support: cfg.build.restrict_to_support,
        k_max: cfg.maintenance.k_max,
        mc: cfg.maintenance.mc.clone(),
    };
    let (matrix, report) = build_self_matrix(&mut game, &anchors, &bcfg)?;
    let maintainer = Maintainer::from_matrix(game, matrix, cfg.maintenance.clone())?;
    let summary = BuildSummary {
        n: report.n,
        k: report.k,
        mode: report.mode,
        restricted: report.restricted,
        trainings: report.trainings,
        utility_evaluations: report.utility_evaluations,
        samples_used: report.samples_used,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        r_max: coverage.r_max,
        anchors: anchors.iter().map(|a| a.0).collect(),
    };
    Ok((maintainer, summary))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub events: usize,
    pub seconds_by_kind: BTreeMap<String, f64>,
    pub events_by_kind: BTreeMap<String, usize>,
    pub evaluations_by_kind: BTreeMap<String, u64>,
    pub utility_evaluations: u64,
    pub trainings: u64,
    /// Tasks added by the stream and still present at the end.
    pub streamed_tasks: Vec<u32>,
    /// Streamed tasks that became anchors or were computed exactly.
    pub computed_tasks: Vec<u32>,
}

/// Applies events in order, logging each one when a log is given.
pub fn replay(
    m: &mut Maintainer,
    events: impl IntoIterator<Item = StreamEvent>,
    mut log: Option<&mut EventLog>,
) -> Result<StreamSummary> {
    let mut summary = StreamSummary::default();
    let trainings_before = m.game().trainings();
    let mut streamed = Vec::new();
    for (index, event) in events.into_iter().enumerate() {
        let kind = event.kind_name().to_string();
        let started = Instant::now();
        let outcome = m
            .apply(event.clone())
            .map_err(|source| HarnessError::Event { index, source })?;
        let seconds = started.elapsed().as_secs_f64();
        let evaluations = outcome.evaluations();
        match &outcome {
            EventOutcome::Task(t, o) => {
                streamed.push(*t);
                if !matches!(o, shapmat_core::maintenance::TaskOutcome::Interpolated(_)) {
                    summary.computed_tasks.push(t.0);
                }
            }
            EventOutcome::Joint(j) => streamed.extend(j.tasks.iter().map(|(t, _)| *t)),
            _ => {}
        }
        *summary.seconds_by_kind.entry(kind.clone()).or_default() += seconds;
        *summary.events_by_kind.entry(kind.clone()).or_default() += 1;
        *summary.evaluations_by_kind.entry(kind).or_default() += evaluations;
        summary.utility_evaluations += evaluations;
        summary.events += 1;
        if let Some(log) = log.as_deref_mut() {
            log.append(&EventRecord {
                index,
                seconds,
                utility_evaluations: evaluations,
                event,
            })?;
        }
    }
    summary.trainings = m.game().trainings() - trainings_before;
    summary.streamed_tasks = streamed
        .into_iter()
        .filter(|t| m.matrix().has_task(*t))
        .map(|t| t.0)
        .collect();
    Ok(summary)
}

/// Column estimators available for references and baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Exact enumeration of the local game over the task's support.
    Exact,
    /// Permutation sampling over every player.
    GlobalMc,
    /// Truncated permutation sampling over every player.
    Tmc,
    /// Complementary sampling over every player.
    Complementary,
}

/// A fresh game over the maintainer's current players and tasks.
fn fresh_game(m: &Maintainer) -> Result<Game> {
    let old = m.game();
    let players: Vec<DataPoint> = old
        .universe()
        .iter()
        .map(|p| old.player(*p).cloned())
        .collect::<shapmat_core::Result<_>>()?;
    let mut game = Game::new(old.config().clone(), players)?;
    if let Some(g) = old.graph() {
        game.attach_graph(g.clone());
    }
    if matches!(old.family(), ModelFamily::DecisionTree { .. }) {
        game.fit()?;
    }
    for t in m.matrix().tasks() {
        match m.matrix().proxy_of(t).filter(|p| game.universe().contains(p)) {
            Some(p) => {
                game.add_proxy_task(p)?;
            }
            None => {
                game.add_task(old.task_point(t)?.clone())?;
            }
        }
    }
    Ok(game)
}

fn estimate(game: &mut Game, t: TaskId, how: Estimator, k_max: usize, mc: &McConfig) -> Result<EstimateReport> {
    let started = Instant::now();
    let mut report = match how {
        Estimator::Exact => {
            let support = game.support(t)?;
            if support.members.len() <= k_max {
                exact_local_shapley(game, &support, t, k_max)?
            } else {
                let mut r = permutation_mc(&mut TaskGame::new(game, t), &support.members, t, mc, false)?;
                r.column.provenance = Provenance::Mc;
                r
            }
        }
        _ => {
            let everyone = shapmat_core::Coalition::new(game.task_universe(t))?;
            let mut g = TaskGame::new(game, t);
            match how {
                Estimator::GlobalMc => permutation_mc(&mut g, &everyone, t, mc, false)?,
                Estimator::Tmc => permutation_mc(&mut g, &everyone, t, mc, true)?,
                _ => complementary_mc(&mut g, &everyone, t, mc)?,
            }
        }
    };
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecomputeReport {
    pub columns: usize,
    pub utility_evaluations: u64,
    pub trainings: u64,
    pub samples_used: usize,
    pub wall_clock_seconds: f64,
}

/// Recomputes every column of the maintained matrix from scratch on a
/// fresh game over the same players and tasks, keeping the layout.
pub fn recompute(m: &Maintainer, how: Estimator, mc: &McConfig) -> Result<(ShapleyMatrix, RecomputeReport)> {
    let started = Instant::now();
    let mut game = fresh_game(m)?;
    let layout = m.matrix();
    let mut out = ShapleyMatrix::new(layout.players().iter().copied())?;
    let mut report = RecomputeReport::default();
    for p in layout.players() {
        if let Some(l) = layout.player_label(*p) {
            out.set_player_label(*p, l);
        }
    }
    for t in layout.tasks() {
        let r = estimate(&mut game, t, how, m.config().k_max, mc)?;
        report.columns += 1;
        report.utility_evaluations += r.utility_evaluations;
        report.samples_used += r.samples_used;
        match layout.proxy_of(t) {
            Some(p) if layout.has_player(p) => out.append_proxy_column(&r.column, false, p)?,
            Some(p) => {
                out.append_column(&r.column, false)?;
                out.set_proxy_of(t, p)?;
            }
            None => out.append_column(&r.column, false)?,
        }
        if let Some(l) = layout.task_label(t) {
            out.set_task_label(t, l);
        }
    }
    for a in layout.anchor_order() {
        out.promote_to_anchor(*a)?;
    }
    report.trainings = game.trainings();
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok((out, report))
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub build: BuildSummary,
    pub stream: StreamSummary,
    pub metrics: Option<MetricsReport>,
    pub matrix: ShapleyMatrix,
    pub reference: Option<ShapleyMatrix>,
    pub maintainer: Maintainer,
}

fn scope_tasks(cfg: &ExperimentConfig, matrix: &ShapleyMatrix, stream: &StreamSummary) -> Vec<TaskId> {
    match cfg.reference.scope {
        MetricScope::All => matrix.tasks().collect(),
        MetricScope::Streamed => {
            let s: BTreeSet<u32> = stream.streamed_tasks.iter().copied().collect();
            matrix.tasks().filter(|t| s.contains(&t.0)).collect()
        }
    }
}

/// Runs the protocol with the planned events (or `events` when replaying a
/// log) and writes artifacts when `output_dir` is set.
pub fn run_stream_with(cfg: &ExperimentConfig, events: Option<Vec<StreamEvent>>) -> Result<RunOutcome> {
    cfg.validate()?;
    let plan = plan(cfg)?;
    let (mut maintainer, build_summary) = build(cfg, &plan)?;
    let events = events.unwrap_or_else(|| plan.events.clone());
    let mut log = match &cfg.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            Some(EventLog::create(&dir.join("events.jsonl"))?)
        }
        None => None,
    };
    let stream = replay(&mut maintainer, events, log.as_mut())?;
    if let Some(log) = log {
        log.finish()?;
    }
    let matrix = maintainer.matrix().clone();
    let reference = match cfg.reference.mode {
        ReferenceMode::None => None,
        ReferenceMode::Exact => Some(recompute(&maintainer, Estimator::Exact, &cfg.maintenance.mc)?.0),
        ReferenceMode::GlobalMc => Some(recompute(&maintainer, Estimator::GlobalMc, &cfg.maintenance.mc)?.0),
    };
    let metrics = match &reference {
        Some(r) => {
            let tasks = scope_tasks(cfg, &matrix, &stream);
            let mut report = metrics_over(&matrix, r, &tasks)?;
            report.seconds_by_kind = stream.seconds_by_kind.clone();
            report.events_by_kind = stream.events_by_kind.clone();
            report.utility_evaluations = build_summary.utility_evaluations + stream.utility_evaluations;
            report.trainings = build_summary.trainings + stream.trainings;
            Some(report)
        }
        None => None,
    };
    let outcome = RunOutcome {
        build: build_summary,
        stream,
        metrics,
        matrix,
        reference,
        maintainer,
    };
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(cfg, &outcome, dir)?;
    }
    Ok(outcome)
}

pub fn run_stream(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_stream_with(cfg, None)
}

pub fn sidecar_for(cfg: &ExperimentConfig, m: &Maintainer) -> Sidecar {
    let gc = m.game().config();
    Sidecar::describe(
        m.matrix(),
        gc.family.clone(),
        gc.utility,
        gc.num_classes,
        cfg.maintenance.clone(),
        cfg.seed,
    )
}

fn write_artifacts(cfg: &ExperimentConfig, run: &RunOutcome, dir: &std::path::Path) -> Result<()> {
    let sidecar = sidecar_for(cfg, &run.maintainer);
    save_with_sidecar(&run.matrix, &sidecar, &dir.join("matrix.txt"))?;
    write_json(&run.build, &dir.join("build_report.json"))?;
    write_json(&run.stream, &dir.join("stream_report.json"))?;
    if let Some(r) = &run.reference {
        save_with_sidecar(r, &sidecar, &dir.join("reference.txt"))?;
    }
    if let Some(m) = &run.metrics {
        write_json(m, &dir.join("metrics.json"))?;
    }
    let config = dir.join("config.toml");
    fs::write(&config, cfg.to_toml()).map_err(|e| HarnessError::io(&config, e))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineReport {
    pub estimator: Estimator,
    pub recompute: RecomputeReport,
    pub metrics: Option<MetricsReport>,
}

/// Values the final universe of a run from scratch with one estimator and,
/// when a reference is configured, scores it against that reference.
pub fn baseline(cfg: &ExperimentConfig, how: Estimator) -> Result<(ShapleyMatrix, BaselineReport)> {
    let mut quiet = cfg.clone();
    quiet.output_dir = None;
    let run = run_stream(&quiet)?;
    let (matrix, recompute_report) = recompute(&run.maintainer, how, &cfg.maintenance.mc)?;
    let metrics = match &run.reference {
        Some(r) => Some(metrics_over(&matrix, r, &scope_tasks(cfg, &matrix, &run.stream))?),
        None => None,
    };
    Ok((
        matrix,
        BaselineReport {
            estimator: how,
            recompute: recompute_report,
            metrics,
        },
    ))
}
