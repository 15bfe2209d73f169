//! Player-by-task Shapley matrix maintenance.
//!
//! The crate keeps a dense matrix of Shapley values, one row per training
//! point (player) and one column per evaluation task, and updates it under
//! task and player arrivals, deletions and replacements. Updates exploit
//! model-induced locality: every task depends on a small support set of
//! players, so a new task column is interpolated from nearby anchor columns
//! and a new player only triggers exact recomputation of the small local
//! games whose support changed.
//!
//! The crate is `no_std` and only needs `alloc`. Everything touching files,
//! clocks or the command line lives in the `shapmat` companion crate.
//!
//! Module map:
//! - [`matrix`]: the maintained [`ShapleyMatrix`] and its mutation primitives.
//! - [`models`]: utility games `v_t(S)` for the supported model families,
//!   support sets and support profiles.
//! - [`locality`]: model-induced distances between task profiles.
//! - [`estimators`]: exact local enumeration and Monte Carlo estimators.
//! - [`maintenance`]: the incremental update engine.
//! - [`selfval`]: self-valuation construction and anchor selection.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod combin;
pub mod data;
pub mod error;
pub mod estimators;
pub mod ids;
pub mod locality;
pub mod maintenance;
pub mod matrix;
pub mod models;
pub mod rng;
pub mod selfval;

pub use data::{DataPoint, Graph, Label};
pub use error::{Error, Ident, Result};
pub use ids::{Coalition, PlayerId, TaskId};
pub use matrix::{Provenance, ShapleyMatrix, ValueColumn};
