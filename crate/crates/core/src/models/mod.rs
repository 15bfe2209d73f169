//! Utility games `v_t(S) = g(theta(S), t)` with model-induced locality.
//!
//! A [`Game`] owns the player pool, the registered tasks and a cache of
//! models trained on coalitions. It answers three questions for a task:
//! the utility of a coalition, the support set `N(t)` of players the
//! prediction depends on, and the support profile used to compare tasks.

pub mod kernel;
pub mod knn;
pub mod ridge;
pub mod tree;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::data::{dot, DataPoint, Graph, Label};
use crate::error::{Error, Ident, Result};
use crate::ids::{Coalition, PlayerId, TaskId};
use crate::locality::{self, DistanceConfig};
use tree::Tree;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum ModelFamily {
    /// Inverse-distance weighted k-NN; the support is the
    /// `support_multiplier * k` nearest players.
    Wknn { k: usize, support_multiplier: f64 },
    /// Gini CART; the support is the task's leaf under the tree fitted on
    /// the current universe.
    DecisionTree { max_depth: usize, min_leaf: usize },
    /// Kernel-vote scorer; the support is every player with kernel relevance
    /// at least `relevance_threshold`.
    RbfScorer { gamma: f64, relevance_threshold: f64 },
    /// Regularised linear ERM with logistic loss scaled by `loss_scale`;
    /// the support is the `support_k` players with the largest
    /// `|<psi(z), psi(t)>|`. Class 0 is the negative class.
    RidgeErm {
        mu: f64,
        loss_scale: f64,
        support_k: usize,
    },
}

impl ModelFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelFamily::Wknn {
                k,
                support_multiplier,
            } => {
                if k == 0 {
                    return Err(Error::InvalidConfig("WKNN needs k >= 1"));
                }
                if !(support_multiplier >= 1.0) {
                    return Err(Error::InvalidConfig("WKNN support multiplier must be >= 1"));
                }
            }
            ModelFamily::DecisionTree { min_leaf, .. } => {
                if min_leaf == 0 {
                    return Err(Error::InvalidConfig("tree min_leaf must be >= 1"));
                }
            }
            ModelFamily::RbfScorer {
                gamma,
                relevance_threshold,
            } => {
                if !(gamma > 0.0) {
                    return Err(Error::InvalidConfig("RBF bandwidth must be positive"));
                }
                if !(relevance_threshold > 0.0 && relevance_threshold <= 1.0) {
                    return Err(Error::InvalidConfig("RBF threshold must lie in (0, 1]"));
                }
            }
            ModelFamily::RidgeErm {
                mu,
                loss_scale,
                support_k,
            } => {
                if !(mu > 0.0) || !(loss_scale > 0.0) {
                    return Err(Error::InvalidConfig("ridge mu and loss scale must be positive"));
                }
                if support_k == 0 {
                    return Err(Error::InvalidConfig("ridge support_k must be >= 1"));
                }
            }
        }
        Ok(())
    }

    /// Profile kind this family compares tasks with by default.
    pub fn native_profile(&self) -> ProfileKind {
        match self {
            ModelFamily::Wknn { .. } => ProfileKind::NeighborWeights,
            ModelFamily::DecisionTree { .. } => ProfileKind::DecisionPath,
            ModelFamily::RbfScorer { .. } => ProfileKind::KernelRelevance,
            ModelFamily::RidgeErm { .. } => ProfileKind::Representation,
        }
    }
}

/// Constants of the ridge ERM family that bound utility variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErmConstants {
    /// Lipschitz constant of the loss in the prediction.
    pub loss_lipschitz: f64,
    /// Upper bound of the loss at prediction zero.
    pub loss_at_zero: f64,
    /// `sqrt(2 * loss_at_zero / mu)`, a bound on every trained parameter norm.
    pub norm_bound: f64,
}

impl ErmConstants {
    pub fn new(mu: f64, loss_scale: f64) -> Self {
        let loss_at_zero = loss_scale * core::f64::consts::LN_2;
        ErmConstants {
            loss_lipschitz: loss_scale,
            loss_at_zero,
            norm_bound: libm::sqrt(2.0 * loss_at_zero / mu),
        }
    }

    /// Lipschitz constant of the utility in `||psi(t) - psi(t')||`.
    pub fn utility_lipschitz(&self) -> f64 {
        self.loss_lipschitz * self.norm_bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum UtilityKind {
    /// 1 when the predicted label matches the task label, else 0.
    Accuracy,
    /// Probability mass the model puts on the task label.
    Confidence,
    /// Negative loss; ridge ERM only.
    NegativeLoss,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameConfig {
    pub family: ModelFamily,
    pub utility: UtilityKind,
    /// Size of the label set; the empty model's confidence is `1 / num_classes`.
    pub num_classes: u32,
    /// Prediction of the empty model under accuracy utility.
    pub default_label: Label,
    /// Upper bound on every support set.
    pub support_cap: usize,
    pub cache: bool,
}

impl GameConfig {
    pub fn new(family: ModelFamily, utility: UtilityKind, num_classes: u32) -> Self {
        GameConfig {
            family,
            utility,
            num_classes,
            default_label: 0,
            support_cap: 20,
            cache: true,
        }
    }
}

/// A trained model. Lazy learners store nothing; they read the coalition at prediction time.
#[derive(Clone, Debug, PartialEq)]
pub enum Trained {
    Lazy,
    Tree(Tree),
    Linear(Vec<f64>),
}

/// `N(t)` at a given universe version.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSet {
    pub task: TaskId,
    pub members: Coalition,
    pub epoch: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProfileKind {
    NeighborWeights,
    DecisionPath,
    KernelRelevance,
    /// Embedding compared by angular alignment.
    Embedding,
    /// Representation compared by Euclidean distance (ridge ERM).
    Representation,
    Ppr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileData {
    /// Nonnegative relevance per player, tagged with the universe version.
    Weights {
        weights: BTreeMap<PlayerId, f64>,
        universe: u64,
    },
    /// Internal node ids on the decision path and the id of the fitted tree.
    Path { nodes: Vec<u32>, tree: u64 },
    Vector(Vec<f64>),
}

/// The local computation structure of one task.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportProfile {
    pub kind: ProfileKind,
    pub data: ProfileData,
    pub label: Label,
}

#[derive(Clone, Debug)]
struct Task {
    point: DataPoint,
    proxy_of: Option<PlayerId>,
}

#[derive(Clone, Debug)]
struct FittedTree {
    tree: Tree,
    id: u64,
}

#[derive(Clone, Debug)]
pub struct Game {
    config: GameConfig,
    pool: BTreeMap<PlayerId, DataPoint>,
    universe: BTreeSet<PlayerId>,
    retired: BTreeSet<PlayerId>,
    tasks: BTreeMap<TaskId, Task>,
    graph: Option<Graph>,
    cache: BTreeMap<Coalition, Trained>,
    scratch: Option<Trained>,
    trainings: u64,
    evaluations: u64,
    epoch: u64,
    fitted: Option<FittedTree>,
    fits: u64,
    dim: usize,
}

impl Game {
    pub fn new(config: GameConfig, players: impl IntoIterator<Item = DataPoint>) -> Result<Self> {
        config.family.validate()?;
        if matches!(config.utility, UtilityKind::NegativeLoss)
            && !matches!(config.family, ModelFamily::RidgeErm { .. })
        {
            return Err(Error::InvalidConfig("negative-loss utility needs the ridge ERM family"));
        }
        if config.num_classes == 0 {
            return Err(Error::InvalidConfig("num_classes must be >= 1"));
        }
        let mut g = Game {
            config,
            pool: BTreeMap::new(),
            universe: BTreeSet::new(),
            retired: BTreeSet::new(),
            tasks: BTreeMap::new(),
            graph: None,
            cache: BTreeMap::new(),
            scratch: None,
            trainings: 0,
            evaluations: 0,
            epoch: 0,
            fitted: None,
            fits: 0,
            dim: 0,
        };
        for p in players {
            g.insert_player(p)?;
        }
        Ok(g)
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn family(&self) -> &ModelFamily {
        &self.config.family
    }

    pub fn erm_constants(&self) -> Option<ErmConstants> {
        match self.config.family {
            ModelFamily::RidgeErm { mu, loss_scale, .. } => Some(ErmConstants::new(mu, loss_scale)),
            _ => None,
        }
    }

    pub fn attach_graph(&mut self, graph: Graph) {
        self.graph = Some(graph);
    }

    pub fn graph(&self) -> Option<&Graph> {
        self.graph.as_ref()
    }

    /// Active players.
    pub fn universe(&self) -> &BTreeSet<PlayerId> {
        &self.universe
    }

    /// Universe version; bumped on every player insertion or deletion.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn trainings(&self) -> u64 {
        self.trainings
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn set_cache(&mut self, enabled: bool) {
        self.config.cache = enabled;
        if !enabled {
            self.cache.clear();
        }
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    pub fn player(&self, p: PlayerId) -> Result<&DataPoint> {
        self.pool.get(&p).ok_or(Error::NotFound(Ident::Player(p)))
    }

    fn check_dim(&mut self, point: &DataPoint) -> Result<()> {
        if self.pool.is_empty() && self.tasks.is_empty() {
            self.dim = point.features.len();
        } else if point.features.len() != self.dim {
            return Err(Error::InvalidConfig("feature dimension differs within the dataset"));
        }
        Ok(())
    }

    fn insert_player(&mut self, point: DataPoint) -> Result<PlayerId> {
        let id = PlayerId(point.id);
        if self.retired.contains(&id) {
            return Err(Error::IdReused(Ident::Player(id)));
        }
        if self.universe.contains(&id) {
            return Err(Error::AlreadyExists(Ident::Player(id)));
        }
        if self
            .tasks
            .get(&id.proxy_task())
            .is_some_and(|t| t.proxy_of.is_none())
        {
            return Err(Error::AlreadyExists(Ident::Task(id.proxy_task())));
        }
        self.check_dim(&point)?;
        self.pool.insert(id, point);
        self.universe.insert(id);
        self.epoch += 1;
        Ok(id)
    }

    /// Adds a player to the universe; a fitted tree is refitted.
    pub fn add_player(&mut self, point: DataPoint) -> Result<PlayerId> {
        let id = self.insert_player(point)?;
        if self.fitted.is_some() {
            self.fit()?;
        }
        Ok(id)
    }

    /// Retires a player. Its data stays in the pool so cached models and its
    /// proxy task remain valid; the id can never be added again.
    pub fn remove_player(&mut self, p: PlayerId) -> Result<DataPoint> {
        if !self.universe.remove(&p) {
            return Err(Error::NotFound(Ident::Player(p)));
        }
        self.retired.insert(p);
        self.epoch += 1;
        if self.fitted.is_some() {
            self.fit()?;
        }
        Ok(self.pool[&p].clone())
    }

    /// Registers an external task.
    pub fn add_task(&mut self, point: DataPoint) -> Result<TaskId> {
        let id = TaskId(point.id);
        if self.tasks.contains_key(&id) || self.pool.contains_key(&PlayerId(point.id)) {
            return Err(Error::AlreadyExists(Ident::Task(id)));
        }
        self.check_dim(&point)?;
        self.tasks.insert(
            id,
            Task {
                point,
                proxy_of: None,
            },
        );
        Ok(id)
    }

    /// Registers (idempotently) the proxy task of player `p`.
    pub fn add_proxy_task(&mut self, p: PlayerId) -> Result<TaskId> {
        let point = self.player(p)?.clone();
        let id = p.proxy_task();
        match self.tasks.get(&id) {
            Some(t) if t.proxy_of == Some(p) => Ok(id),
            Some(_) => Err(Error::AlreadyExists(Ident::Task(id))),
            None => {
                self.tasks.insert(
                    id,
                    Task {
                        point,
                        proxy_of: Some(p),
                    },
                );
                Ok(id)
            }
        }
    }

    pub fn remove_task(&mut self, t: TaskId) -> Result<()> {
        self.tasks
            .remove(&t)
            .map(|_| ())
            .ok_or(Error::NotFound(Ident::Task(t)))
    }

    pub fn has_task(&self, t: TaskId) -> bool {
        self.tasks.contains_key(&t)
    }

    pub fn task_point(&self, t: TaskId) -> Result<&DataPoint> {
        self.tasks
            .get(&t)
            .map(|x| &x.point)
            .ok_or(Error::NotFound(Ident::Task(t)))
    }

    pub fn proxy_player(&self, t: TaskId) -> Option<PlayerId> {
        self.tasks.get(&t).and_then(|x| x.proxy_of)
    }

    /// The universe a task is valued over: all active players except the
    /// task's own player.
    pub fn task_universe(&self, t: TaskId) -> BTreeSet<PlayerId> {
        let mut u = self.universe.clone();
        if let Some(p) = self.proxy_player(t) {
            u.remove(&p);
        }
        u
    }

    /// Fits the structure the support rule depends on (the tree fitted on
    /// the current universe); a no-op marker for the other families.
    pub fn fit(&mut self) -> Result<()> {
        if let ModelFamily::DecisionTree {
            max_depth,
            min_leaf,
        } = self.config.family
        {
            let rows: Vec<(PlayerId, &DataPoint)> =
                self.universe.iter().map(|p| (*p, &self.pool[p])).collect();
            let tree = Tree::fit(&rows, max_depth, min_leaf);
            self.fits += 1;
            self.fitted = Some(FittedTree {
                tree,
                id: self.fits,
            });
        } else {
            self.fits += 1;
            self.fitted = Some(FittedTree {
                tree: Tree::fit(&[], 0, 1),
                id: self.fits,
            });
        }
        Ok(())
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }

    fn fitted_tree(&self) -> Result<&FittedTree> {
        self.fitted.as_ref().ok_or(Error::NotFitted)
    }

    fn members<'a>(&'a self, s: &'a Coalition) -> impl Iterator<Item = (PlayerId, &'a DataPoint)> + Clone + 'a {
        s.iter().map(move |p| (p, &self.pool[&p]))
    }

    fn fit_coalition(&self, s: &Coalition) -> Trained {
        match self.config.family {
            ModelFamily::Wknn { .. } | ModelFamily::RbfScorer { .. } => Trained::Lazy,
            ModelFamily::DecisionTree {
                max_depth,
                min_leaf,
            } => {
                let rows: Vec<_> = self.members(s).collect();
                Trained::Tree(Tree::fit(&rows, max_depth, min_leaf))
            }
            ModelFamily::RidgeErm { mu, loss_scale, .. } => {
                let rows: Vec<(&[f64], f64)> = self
                    .members(s)
                    .map(|(_, p)| (p.representation(), sign_label(p.label)))
                    .collect();
                let dim = self
                    .members(s)
                    .next()
                    .map_or(self.dim, |(_, p)| p.representation().len());
                Trained::Linear(ridge::fit(&rows, dim, mu, loss_scale))
            }
        }
    }

    /// Trains (or fetches from cache) the model of coalition `s`. Members
    /// must be known players, active or retired.
    pub fn train(&mut self, s: &Coalition) -> Result<&Trained> {
        if let Some(p) = s.iter().find(|p| !self.pool.contains_key(p)) {
            return Err(Error::NotFound(Ident::Player(p)));
        }
        if self.config.cache {
            if !self.cache.contains_key(s) {
                let m = self.fit_coalition(s);
                self.trainings += 1;
                self.cache.insert(s.clone(), m);
            }
            Ok(&self.cache[s])
        } else {
            let m = self.fit_coalition(s);
            self.trainings += 1;
            Ok(self.scratch.insert(m))
        }
    }

    /// `v_t(S)`.
    pub fn utility(&mut self, s: &Coalition, t: TaskId) -> Result<f64> {
        Ok(self.utilities(s, &[t])?[0])
    }

    /// `v_t(S)` for several tasks from one trained model.
    pub fn utilities(&mut self, s: &Coalition, tasks: &[TaskId]) -> Result<Vec<f64>> {
        for t in tasks {
            if !self.tasks.contains_key(t) {
                return Err(Error::NotFound(Ident::Task(*t)));
            }
        }
        self.train(s)?;
        let model = if self.config.cache {
            &self.cache[s]
        } else {
            self.scratch.as_ref().unwrap()
        };
        let out: Vec<f64> = tasks
            .iter()
            .map(|t| self.evaluate(model, s, &self.tasks[t].point))
            .collect();
        self.evaluations += tasks.len() as u64;
        Ok(out)
    }

    fn evaluate(&self, model: &Trained, s: &Coalition, task: &DataPoint) -> f64 {
        let classes = self.config.num_classes as f64;
        let from_scores = |scores: &BTreeMap<Label, f64>| -> f64 {
            let total: f64 = scores.values().sum();
            match self.config.utility {
                UtilityKind::Accuracy => {
                    let pred = if total > 0.0 {
                        knn::argmax(scores).unwrap_or(self.config.default_label)
                    } else {
                        self.config.default_label
                    };
                    (pred == task.label) as u8 as f64
                }
                _ => {
                    if total > 0.0 {
                        scores.get(&task.label).copied().unwrap_or(0.0) / total
                    } else {
                        1.0 / classes
                    }
                }
            }
        };
        match (&self.config.family, model) {
            (ModelFamily::Wknn { k, .. }, Trained::Lazy) => {
                from_scores(&knn::votes(&task.features, self.members(s), *k))
            }
            (ModelFamily::RbfScorer { gamma, .. }, Trained::Lazy) => {
                let scores = kernel::scores(*gamma, &task.features, self.members(s));
                if matches!(self.config.utility, UtilityKind::Accuracy) {
                    from_scores(&scores)
                } else {
                    // zero score for the empty model
                    let total: f64 = scores.values().sum();
                    if total > 0.0 {
                        scores.get(&task.label).copied().unwrap_or(0.0) / total
                    } else {
                        0.0
                    }
                }
            }
            (ModelFamily::DecisionTree { .. }, Trained::Tree(tree)) => {
                let (counts, _) = tree.leaf(&task.features);
                let scores: BTreeMap<Label, f64> =
                    counts.iter().map(|(l, c)| (*l, *c as f64)).collect();
                from_scores(&scores)
            }
            (ModelFamily::RidgeErm { loss_scale, .. }, Trained::Linear(theta)) => {
                let a = dot(theta, task.representation());
                let y = sign_label(task.label);
                match self.config.utility {
                    UtilityKind::NegativeLoss => -ridge::loss(*loss_scale, a, y),
                    UtilityKind::Accuracy => (a * y > 0.0) as u8 as f64,
                    UtilityKind::Confidence => ridge::sigmoid(y * a),
                }
            }
            _ => unreachable!("model kind always matches the family"),
        }
    }

    /// `N(t)` over the task's universe.
    pub fn support(&self, t: TaskId) -> Result<SupportSet> {
        let u = self.task_universe(t);
        self.support_over(t, &u)
    }

    /// `N(t)` restricted to the players in `over`.
    pub fn support_over(&self, t: TaskId, over: &BTreeSet<PlayerId>) -> Result<SupportSet> {
        let task = self.task_point(t)?;
        let proxy = self.proxy_player(t);
        let cap = self.config.support_cap;
        let candidates = || {
            over.iter()
                .filter(move |p| Some(**p) != proxy)
                .filter_map(|p| self.pool.get(p).map(|d| (*p, d)))
        };
        let members: Vec<PlayerId> = match self.config.family {
            ModelFamily::Wknn {
                k,
                support_multiplier,
            } => {
                let m = libm::round(support_multiplier * k as f64) as usize;
                knn::nearest(&task.features, candidates(), m.min(cap))
                    .into_iter()
                    .map(|(p, _)| p)
                    .collect()
            }
            ModelFamily::DecisionTree { .. } => {
                let fitted = self.fitted_tree()?;
                let (_, leaf) = fitted.tree.leaf(&task.features);
                let co: BTreeSet<PlayerId> = leaf.iter().copied().collect();
                knn::nearest(
                    &task.features,
                    candidates().filter(|(p, _)| co.contains(p)),
                    cap,
                )
                .into_iter()
                .map(|(p, _)| p)
                .collect()
            }
            ModelFamily::RbfScorer {
                gamma,
                relevance_threshold,
            } => {
                let mut scored: Vec<(PlayerId, f64)> = candidates()
                    .map(|(p, d)| (p, kernel::rbf(gamma, &task.features, &d.features)))
                    .filter(|(_, k)| *k >= relevance_threshold)
                    .collect();
                scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                scored.into_iter().take(cap).map(|(p, _)| p).collect()
            }
            ModelFamily::RidgeErm { support_k, .. } => {
                let psi = task.representation();
                let mut scored: Vec<(PlayerId, f64)> = candidates()
                    .map(|(p, d)| (p, libm::fabs(dot(d.representation(), psi))))
                    .collect();
                scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                scored
                    .into_iter()
                    .take(support_k.min(cap))
                    .map(|(p, _)| p)
                    .collect()
            }
        };
        Ok(SupportSet {
            task: t,
            members: Coalition::new(members)?,
            epoch: self.epoch,
        })
    }

    /// Profile of the family's native kind.
    pub fn profile(&self, t: TaskId) -> Result<SupportProfile> {
        self.profile_with(t, &DistanceConfig::default())
    }

    /// Profile of the kind selected by `cfg`, falling back to the native kind.
    pub fn profile_with(&self, t: TaskId, cfg: &DistanceConfig) -> Result<SupportProfile> {
        let kind = cfg.kind.unwrap_or(self.config.family.native_profile());
        self.profile_of_kind(t, kind, cfg)
    }

    pub fn profile_of_kind(
        &self,
        t: TaskId,
        kind: ProfileKind,
        cfg: &DistanceConfig,
    ) -> Result<SupportProfile> {
        let task = self.task_point(t)?;
        let u = self.task_universe(t);
        let data = match kind {
            ProfileKind::NeighborWeights => {
                let support = self.support_over(t, &u)?;
                let raw: Vec<(PlayerId, f64)> = support
                    .members
                    .iter()
                    .map(|p| {
                        let d = crate::data::euclidean(&task.features, &self.pool[&p].features);
                        (p, knn::inverse_distance(d))
                    })
                    .collect();
                let total: f64 = raw.iter().map(|(_, w)| w).sum();
                let weights = raw
                    .into_iter()
                    .map(|(p, w)| (p, if total > 0.0 { w / total } else { 0.0 }))
                    .collect();
                ProfileData::Weights {
                    weights,
                    universe: self.epoch,
                }
            }
            ProfileKind::DecisionPath => {
                if !matches!(self.config.family, ModelFamily::DecisionTree { .. }) {
                    return Err(Error::KindMismatch);
                }
                let fitted = self.fitted_tree()?;
                let (nodes, _) = fitted.tree.route(&task.features);
                ProfileData::Path {
                    nodes,
                    tree: fitted.id,
                }
            }
            ProfileKind::KernelRelevance => {
                let gamma = match self.config.family {
                    ModelFamily::RbfScorer { gamma, .. } => gamma,
                    _ => return Err(Error::KindMismatch),
                };
                let weights = u
                    .iter()
                    .map(|p| (*p, kernel::rbf(gamma, &task.features, &self.pool[p].features)))
                    .filter(|(_, k)| *k > 0.0)
                    .collect();
                ProfileData::Weights {
                    weights,
                    universe: self.epoch,
                }
            }
            ProfileKind::Embedding | ProfileKind::Representation => {
                ProfileData::Vector(task.representation().to_vec())
            }
            ProfileKind::Ppr => {
                let graph = self.graph.as_ref().ok_or(Error::NoGraph)?;
                let full = locality::ppr_vector(graph, task.id, cfg)?;
                let weights = full
                    .into_iter()
                    .map(|(n, w)| (PlayerId(n), w))
                    .filter(|(p, w)| u.contains(p) && *w > 0.0)
                    .collect();
                ProfileData::Weights {
                    weights,
                    universe: self.epoch,
                }
            }
        };
        Ok(SupportProfile {
            kind,
            data,
            label: task.label,
        })
    }
}

/// Sign label used by the ridge family: class 0 is negative.
pub fn sign_label(label: Label) -> f64 {
    if label == 0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use alloc::vec;
    use rand::Rng;

    fn blobs(n: u32, seed: u64) -> Vec<DataPoint> {
        let mut rng = stream(seed, 0);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let c = if label == 0 { -1.0 } else { 1.0 };
                DataPoint::new(
                    i,
                    vec![c + rng.random_range(-1.2..1.2), rng.random_range(-1.0..1.0)],
                    label,
                )
            })
            .collect()
    }

    fn wknn(k: usize) -> GameConfig {
        GameConfig::new(
            ModelFamily::Wknn {
                k,
                support_multiplier: 2.0,
            },
            UtilityKind::Accuracy,
            2,
        )
    }

    fn random_coalition(rng: &mut impl Rng, n: u32) -> Coalition {
        Coalition::new((0..n).filter(|_| rng.random_bool(0.4)).map(PlayerId)).unwrap()
    }

    #[test]
    fn single_neighbour_vote() {
        let mut g = Game::new(wknn(1), blobs(6, 1)).unwrap();
        let t = g.add_task(DataPoint::new(100, vec![0.0, 0.0], 1)).unwrap();
        let s = Coalition::new([PlayerId(3)]).unwrap();
        assert_eq!(g.utility(&s, t).unwrap(), 1.0);
        // empty model predicts the default class 0
        assert_eq!(g.utility(&Coalition::empty(), t).unwrap(), 0.0);
    }

    #[test]
    fn wknn_support_size() {
        let mut g = Game::new(wknn(5), blobs(100, 2)).unwrap();
        let t = g.add_task(DataPoint::new(1000, vec![0.1, 0.2], 0)).unwrap();
        assert_eq!(g.support(t).unwrap().members.len(), 10);
        let mut h = Game::new(wknn(5), blobs(1, 2)).unwrap();
        let t = h.add_task(DataPoint::new(1000, vec![0.1, 0.2], 0)).unwrap();
        assert_eq!(h.support(t).unwrap().members.members(), &[PlayerId(0)]);
    }

    #[test]
    fn cache_is_transparent_and_counts_distinct_coalitions() {
        let pts = blobs(12, 3);
        let mut cached = Game::new(wknn(3), pts.clone()).unwrap();
        let mut plain = Game::new(GameConfig { cache: false, ..wknn(3) }, pts).unwrap();
        let tasks: Vec<TaskId> = (0..4)
            .map(|i| {
                let p = DataPoint::new(500 + i, vec![i as f64 * 0.3 - 0.5, 0.1], i % 2);
                cached.add_task(p.clone()).unwrap();
                plain.add_task(p).unwrap()
            })
            .collect();
        let mut rng = stream(9, 1);
        let mut distinct = BTreeSet::new();
        for _ in 0..200 {
            let s = random_coalition(&mut rng, 12);
            let t = tasks[rng.random_range(0..4)];
            let a = cached.utility(&s, t).unwrap();
            assert_eq!(a.to_bits(), plain.utility(&s, t).unwrap().to_bits());
            assert_eq!(a.to_bits(), cached.utility(&s, t).unwrap().to_bits());
            distinct.insert(s);
        }
        assert_eq!(cached.trainings(), distinct.len() as u64);
        assert_eq!(plain.trainings(), 200);
    }

    #[test]
    fn players_outside_support_are_null() {
        let mut g = Game::new(wknn(2), blobs(20, 4)).unwrap();
        let t = g.add_task(DataPoint::new(99, vec![0.9, -0.2], 1)).unwrap();
        let support = g.support(t).unwrap().members;
        let mut rng = stream(4, 2);
        for z in (0..20).map(PlayerId).filter(|p| !support.contains(*p)) {
            for _ in 0..50 {
                // coalitions drawn inside the support decide the vote alone
                let s = Coalition::new(support.iter().filter(|_| rng.random_bool(0.5))).unwrap();
                let a = g.utility(&s, t).unwrap();
                let b = g.utility(&s.with(z), t).unwrap();
                if s.len() >= 2 {
                    assert_eq!(a, b);
                }
            }
        }
    }

    fn ridge(mu: f64, scale: f64) -> GameConfig {
        GameConfig::new(
            ModelFamily::RidgeErm {
                mu,
                loss_scale: scale,
                support_k: 50,
            },
            UtilityKind::NegativeLoss,
            2,
        )
    }

    #[test]
    fn ridge_norm_and_lipschitz_bounds() {
        let (mu, scale) = (0.5, 1.3);
        let mut g = Game::new(ridge(mu, scale), blobs(15, 5)).unwrap();
        let c = g.erm_constants().unwrap();
        assert_eq!(c.norm_bound, libm::sqrt(2.0 * scale * core::f64::consts::LN_2 / mu));
        let mut rng = stream(5, 3);
        let mut next = 1000;
        for _ in 0..100 {
            let s = random_coalition(&mut rng, 15);
            let label = rng.random_range(0..2);
            let mut task = || {
                next += 1;
                DataPoint::new(next, vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)], label)
            };
            let (p, q) = (task(), task());
            let gap = crate::data::euclidean(&p.features, &q.features);
            let t = g.add_task(p).unwrap();
            let u = g.add_task(q).unwrap();
            let vt = g.utility(&s, t).unwrap();
            let vu = g.utility(&s, u).unwrap();
            assert!(vt <= 0.0 && vu <= 0.0);
            assert!((vt - vu).abs() <= c.utility_lipschitz() * gap + 1e-12);
            if let Trained::Linear(theta) = g.train(&s).unwrap() {
                assert!(libm::sqrt(dot(theta, theta)) <= c.norm_bound);
            }
        }
        let t = g.add_task(DataPoint::new(5000, vec![1.0, 1.0], 1)).unwrap();
        // zero parameters: loss s ln 2
        let v0 = g.utility(&Coalition::empty(), t).unwrap();
        assert!((v0 + scale * core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn tree_profiles_need_a_fit() {
        let cfg = GameConfig::new(
            ModelFamily::DecisionTree {
                max_depth: 0,
                min_leaf: 1,
            },
            UtilityKind::Accuracy,
            2,
        );
        let mut g = Game::new(cfg, blobs(10, 6)).unwrap();
        let t = g.add_task(DataPoint::new(50, vec![0.0, 0.0], 0)).unwrap();
        assert_eq!(g.profile(t).unwrap_err(), Error::NotFitted);
        g.fit().unwrap();
        match g.profile(t).unwrap().data {
            ProfileData::Path { nodes, .. } => assert!(nodes.is_empty()),
            other => panic!("unexpected profile {other:?}"),
        }
    }

    #[test]
    fn rbf_profile_values() {
        let gamma = 0.7;
        let cfg = GameConfig::new(
            ModelFamily::RbfScorer {
                gamma,
                relevance_threshold: 0.5,
            },
            UtilityKind::Accuracy,
            2,
        );
        let pts = blobs(8, 7);
        let mut g = Game::new(cfg, pts.clone()).unwrap();
        let t = g.add_task(DataPoint::new(40, vec![0.2, -0.1], 0)).unwrap();
        let ProfileData::Weights { weights, .. } = g.profile(t).unwrap().data else {
            panic!("weights expected");
        };
        for p in &pts {
            let d2: f64 = (p.features[0] - 0.2).powi(2) + (p.features[1] + 0.1).powi(2);
            let k = weights[&PlayerId(p.id)];
            assert!(k > 0.0 && k <= 1.0);
            assert!((k - libm::exp(-gamma * d2)).abs() < 1e-15);
        }
    }

    #[test]
    fn wknn_profile_peaks_on_identical_point() {
        let pts = blobs(10, 8);
        let twin = pts[4].clone();
        let mut g = Game::new(wknn(3), pts).unwrap();
        let t = g
            .add_task(DataPoint::new(77, twin.features.clone(), twin.label))
            .unwrap();
        let ProfileData::Weights { weights, .. } = g.profile(t).unwrap().data else {
            panic!("weights expected");
        };
        let top = weights
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(p, _)| *p);
        assert_eq!(top, Some(PlayerId(4)));
        let total: f64 = weights.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ids_are_never_reused() {
        let mut g = Game::new(wknn(1), blobs(3, 9)).unwrap();
        let p = g.remove_player(PlayerId(1)).unwrap();
        assert_eq!(g.add_player(p).unwrap_err(), Error::IdReused(Ident::Player(PlayerId(1))));
        assert_eq!(
            g.add_task(DataPoint::new(2, vec![0.0, 0.0], 0)).unwrap_err(),
            Error::AlreadyExists(Ident::Task(TaskId(2)))
        );
    }
}
