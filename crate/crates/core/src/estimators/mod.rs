//! Shapley value estimators over a fixed player set.
//!
//! Every estimator works on any [`CoalitionGame`], so the same code values a
//! task's small support set or the full player universe.

mod exact;
mod mc;

pub use exact::{exact_local_shapley, exact_shapley, HARD_LIMIT};
pub use mc::{complementary_mc, permutation_mc, stopping_check};

use crate::error::{Error, Result};
use crate::ids::{Coalition, TaskId};
use crate::matrix::ValueColumn;
use crate::models::Game;

/// A cooperative game over coalitions of players.
pub trait CoalitionGame {
    fn value(&mut self, s: &Coalition) -> Result<f64>;

    /// Models trained so far; games without training report zero.
    fn trainings(&self) -> u64 {
        0
    }
}

impl<F: FnMut(&Coalition) -> f64> CoalitionGame for F {
    fn value(&mut self, s: &Coalition) -> Result<f64> {
        Ok(self(s))
    }
}

/// The game `S -> v_t(S)` of one task.
pub struct TaskGame<'a> {
    pub game: &'a mut Game,
    pub task: TaskId,
}

impl<'a> TaskGame<'a> {
    pub fn new(game: &'a mut Game, task: TaskId) -> Self {
        TaskGame { game, task }
    }
}

impl CoalitionGame for TaskGame<'_> {
    fn value(&mut self, s: &Coalition) -> Result<f64> {
        self.game.utility(s, self.task)
    }

    fn trainings(&self) -> u64 {
        self.game.trainings()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct McConfig {
    pub max_samples: usize,
    pub check_interval: usize,
    pub rel_change_stop: f64,
    pub truncation_tolerance: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            max_samples: 5000,
            check_interval: 100,
            rel_change_stop: 0.05,
            truncation_tolerance: 0.01,
            seed: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.check_interval == 0 || self.max_samples < self.check_interval {
            return Err(Error::InvalidConfig("need max_samples >= check_interval >= 1"));
        }
        if !(self.rel_change_stop > 0.0) || !(self.truncation_tolerance > 0.0) {
            return Err(Error::InvalidConfig("MC tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub column: ValueColumn,
    /// Utility queries issued, cache hits included.
    pub utility_evaluations: u64,
    /// Models trained during the run.
    pub trainings: u64,
    pub samples_used: usize,
    /// Filled in by callers that own a clock.
    pub wall_clock_seconds: f64,
}
