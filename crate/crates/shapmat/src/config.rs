//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [data]
//! source = "blobs"
//! classes = 3
//! per_class = 27
//!
//! [model]
//! family = "wknn"
//! k = 3
//! support_multiplier = 2.0
//!
//! [anchors]
//! ratio = 0.5
//!
//! [stream]
//! initial = 60
//! tasks = 20
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shapmat_core::maintenance::MaintenanceConfig;
use shapmat_core::models::{ModelFamily, UtilityKind};
use shapmat_core::selfval::BuildMode;

use crate::error::{HarnessError, Result};
use crate::synth::BlobSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Blobs(BlobSpec),
    Ring {
        nodes: usize,
        #[serde(default = "default_classes")]
        classes: u32,
        #[serde(default)]
        chords: usize,
    },
    Files {
        points: PathBuf,
        #[serde(default)]
        graph: Option<PathBuf>,
    },
}

fn default_classes() -> u32 {
    2
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Blobs(BlobSpec::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub family: ModelFamily,
    #[serde(default = "default_utility")]
    pub utility: UtilityKind,
    #[serde(default = "default_cap")]
    pub support_cap: usize,
}

fn default_utility() -> UtilityKind {
    UtilityKind::Accuracy
}

fn default_cap() -> usize {
    20
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: ModelFamily::Wknn {
                k: 3,
                support_multiplier: 2.0,
            },
            utility: default_utility(),
            support_cap: default_cap(),
        }
    }
}

/// Anchor budget: an absolute count or a ratio of the initial players.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorBudget {
    pub count: Option<usize>,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub mode: BuildMode,
    pub restrict_to_support: bool,
}

impl Default for BuildSection {
    fn default() -> Self {
        BuildSection {
            mode: BuildMode::ExactShared,
            restrict_to_support: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOrder {
    #[default]
    TasksFirst,
    PlayersFirst,
    Interleaved,
}

/// Which points are held out and how they arrive.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamSpec {
    /// Initial players; defaults to every point not held out.
    pub initial: Option<usize>,
    pub tasks: usize,
    /// Alternative to `tasks`: fraction of the dataset streamed as tasks.
    pub task_fraction: Option<f64>,
    pub players: usize,
    /// Alternative to `players`: fraction of the dataset streamed as players.
    pub player_fraction: Option<f64>,
    pub player_deletes: usize,
    pub player_replaces: usize,
    pub order: EventOrder,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Exact enumeration of each column's local game.
    #[default]
    Exact,
    /// Permutation sampling over every player.
    GlobalMc,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricScope {
    #[default]
    All,
    /// Only columns added by the stream.
    Streamed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSpec {
    pub mode: ReferenceMode,
    pub scope: MetricScope,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataSource,
    pub model: ModelConfig,
    pub anchors: AnchorBudget,
    pub build: BuildSection,
    pub maintenance: MaintenanceConfig,
    pub stream: StreamSpec,
    pub reference: ReferenceSpec,
    pub output_dir: Option<PathBuf>,
}

fn fraction(name: &str, f: Option<f64>) -> Result<()> {
    match f {
        Some(x) if !(x > 0.0 && x < 1.0) => Err(HarnessError::Config(format!("{name} must lie in (0, 1), got {x}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            HarnessError::parse(line, e.message().to_string())
        })
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (DataSource::Files { points, graph }, Some(dir)) = (&mut cfg.data, path.parent()) {
            if points.is_relative() {
                *points = dir.join(&*points);
            }
            if let Some(g) = graph.as_mut().filter(|g| g.is_relative()) {
                *g = dir.join(&*g);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serializable config")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.anchors.ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(HarnessError::Config(format!("anchors.ratio must lie in (0, 1], got {r}")));
            }
        }
        fraction("stream.task_fraction", self.stream.task_fraction)?;
        fraction("stream.player_fraction", self.stream.player_fraction)?;
        if self.anchors.count.is_some() && self.anchors.ratio.is_some() {
            return Err(HarnessError::Config("give anchors.count or anchors.ratio, not both".into()));
        }
        if self.anchors.count == Some(0) {
            return Err(HarnessError::Config("anchors.count must be >= 1".into()));
        }
        self.model.family.validate()?;
        self.maintenance.validate()?;
        match &self.data {
            DataSource::Blobs(b) => b.validate()?,
            DataSource::Ring { nodes, classes, .. } => {
                if *nodes < 3 || *classes == 0 {
                    return Err(HarnessError::Config("ring needs at least 3 nodes and 1 class".into()));
                }
            }
            DataSource::Files { points, graph } => {
                for p in std::iter::once(points).chain(graph) {
                    if !p.exists() {
                        return Err(HarnessError::Config(format!("missing file {}", p.display())));
                    }
                }
            }
        }
        Ok(())
    }

    /// The seed drives every sampler; the estimator seeds follow it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.maintenance.mc.seed = seed;
        self
    }
}
