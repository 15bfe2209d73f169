//! File formats, dataset ingestion, metrics and the streaming experiment
//! protocol around [`shapmat_core`].
//!
//! - [`matrix_io`] and [`metadata`]: the matrix text grid and its JSON sidecar.
//! - [`dataset`] and [`synth`]: CSV points and edge lists, seeded synthetic data.
//! - [`events`]: the JSON Lines event log.
//! - [`metrics`]: Spearman and Pearson agreement over filtered entries.
//! - [`config`], [`experiment`] and [`sweep`]: experiment configs, runs and sweeps.

pub mod config;
pub mod dataset;
pub mod error;
pub mod events;
pub mod experiment;
pub mod matrix_io;
pub mod metadata;
pub mod metrics;
pub mod sweep;
pub mod synth;

pub use error::{HarnessError, Result};
