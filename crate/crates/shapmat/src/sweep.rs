//! One-knob parameter sweeps, emitted as CSV.

use serde::{Deserialize, Serialize};
use shapmat_core::models::ModelFamily;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::run_stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    SupportSize,
    AnchorRatio,
    InterpK,
    Tau,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub knob: Knob,
    pub value: f64,
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
    pub omega: Option<usize>,
    pub anchors: usize,
    pub r_max: f64,
    pub build_trainings: u64,
    pub build_evaluations: u64,
    pub build_seconds: f64,
    pub stream_evaluations: u64,
    pub stream_trainings: u64,
    pub stream_seconds: f64,
    /// Mean utility evaluations per player insertion.
    pub player_update_evaluations: f64,
    pub player_update_seconds: f64,
}

/// The config with one knob set to `value`.
pub fn apply_knob(cfg: &ExperimentConfig, knob: Knob, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    let whole = || -> Result<usize> {
        if value >= 1.0 && value.fract() == 0.0 {
            Ok(value as usize)
        } else {
            Err(HarnessError::Config(format!("{knob:?} needs a positive integer, got {value}")))
        }
    };
    match knob {
        Knob::SupportSize => {
            let s = whole()?;
            c.model.support_cap = c.model.support_cap.max(s);
            match &mut c.model.family {
                ModelFamily::Wknn { k, support_multiplier } => {
                    *k = (*k).min(s);
                    *support_multiplier = s as f64 / *k as f64;
                }
                ModelFamily::RidgeErm { support_k, .. } => *support_k = s,
                _ => c.model.support_cap = s,
            }
        }
        Knob::AnchorRatio => {
            c.anchors.count = None;
            c.anchors.ratio = Some(value);
        }
        Knob::InterpK => c.maintenance.k_interp = whole()?,
        Knob::Tau => c.maintenance.tau = value,
    }
    c.output_dir = None;
    c.validate()?;
    Ok(c)
}

pub fn sweep(cfg: &ExperimentConfig, knob: Knob, grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&value| {
            let run = run_stream(&apply_knob(cfg, knob, value)?)?;
            let s = &run.stream;
            let adds = s.events_by_kind.get("player_add").copied().unwrap_or(0);
            let per_add = |total: f64| if adds == 0 { 0.0 } else { total / adds as f64 };
            Ok(SweepRow {
                knob,
                value,
                spearman: run.metrics.as_ref().map(|m| m.spearman),
                pearson: run.metrics.as_ref().map(|m| m.pearson),
                omega: run.metrics.as_ref().map(|m| m.omega),
                anchors: run.build.k,
                r_max: run.build.r_max,
                build_trainings: run.build.trainings,
                build_evaluations: run.build.utility_evaluations,
                build_seconds: run.build.wall_clock_seconds,
                stream_evaluations: s.utility_evaluations,
                stream_trainings: s.trainings,
                stream_seconds: s.seconds_by_kind.values().sum(),
                player_update_evaluations: per_add(
                    s.evaluations_by_kind.get("player_add").copied().unwrap_or(0) as f64,
                ),
                player_update_seconds: per_add(s.seconds_by_kind.get("player_add").copied().unwrap_or(0.0)),
            })
        })
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat row");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}
