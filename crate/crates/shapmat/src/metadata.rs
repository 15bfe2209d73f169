//! JSON sidecar stored next to a matrix file. It records how the matrix
//! was produced and the per-id details the text grid does not carry.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shapmat_core::maintenance::MaintenanceConfig;
use shapmat_core::models::{ModelFamily, UtilityKind};
use shapmat_core::{PlayerId, Provenance, ShapleyMatrix, TaskId};

use crate::error::{HarnessError, Result};
use crate::matrix_io;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub family: ModelFamily,
    pub utility: UtilityKind,
    pub num_classes: u32,
    pub maintenance: MaintenanceConfig,
    pub seed: u64,
    #[serde(default)]
    pub player_labels: BTreeMap<u32, u32>,
    #[serde(default)]
    pub task_labels: BTreeMap<u32, u32>,
    #[serde(default)]
    pub provenance: BTreeMap<u32, Provenance>,
    /// Proxy links, including those of players deleted since.
    #[serde(default)]
    pub proxies: BTreeMap<u32, u32>,
}

impl Sidecar {
    pub fn describe(
        m: &ShapleyMatrix,
        family: ModelFamily,
        utility: UtilityKind,
        num_classes: u32,
        maintenance: MaintenanceConfig,
        seed: u64,
    ) -> Self {
        let player_labels = m
            .players()
            .iter()
            .filter_map(|p| m.player_label(*p).map(|l| (p.0, l)))
            .collect();
        let tasks: Vec<TaskId> = m.tasks().collect();
        Sidecar {
            family,
            utility,
            num_classes,
            maintenance,
            seed,
            player_labels,
            task_labels: tasks
                .iter()
                .filter_map(|t| m.task_label(*t).map(|l| (t.0, l)))
                .collect(),
            provenance: tasks
                .iter()
                .map(|t| (t.0, m.provenance(*t).expect("listed task")))
                .collect(),
            proxies: tasks
                .iter()
                .filter_map(|t| m.proxy_of(*t).map(|p| (t.0, p.0)))
                .collect(),
        }
    }

    /// Restores labels, provenance and proxy links on a freshly parsed grid.
    pub fn apply(&self, m: &mut ShapleyMatrix) -> Result<()> {
        for (p, l) in &self.player_labels {
            m.set_player_label(PlayerId(*p), *l);
        }
        for (t, l) in &self.task_labels {
            m.set_task_label(TaskId(*t), *l);
        }
        for (t, prov) in &self.provenance {
            m.set_provenance(TaskId(*t), *prov)?;
        }
        for (t, p) in &self.proxies {
            m.set_proxy_of(TaskId(*t), PlayerId(*p))?;
        }
        Ok(())
    }
}

pub fn sidecar_path(matrix: &Path) -> PathBuf {
    let mut name = matrix.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_json(value)).map_err(|e| HarnessError::io(path, e))
}

/// Writes the grid and its sidecar.
pub fn save_with_sidecar(m: &ShapleyMatrix, sidecar: &Sidecar, path: &Path) -> Result<()> {
    matrix_io::save_matrix(m, path)?;
    write_json(sidecar, &sidecar_path(path))
}

/// Loads the grid and, when present, applies its sidecar.
pub fn load_with_sidecar(path: &Path) -> Result<(ShapleyMatrix, Option<Sidecar>)> {
    let mut m = matrix_io::load_matrix(path)?;
    let meta = sidecar_path(path);
    if !meta.exists() {
        return Ok((m, None));
    }
    let text = fs::read_to_string(&meta).map_err(|e| HarnessError::io(&meta, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text)
        .map_err(|e| HarnessError::parse(e.line(), e.to_string()))?;
    sidecar.apply(&mut m)?;
    Ok((m, Some(sidecar)))
}
