use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shapmat::config::{ExperimentConfig, ReferenceMode};
use shapmat::error::{HarnessError, Result};
use shapmat::events::load_events;
use shapmat::experiment::{self, Estimator};
use shapmat::metadata::{load_with_sidecar, save_with_sidecar, write_json};
use shapmat::metrics::{metrics, metrics_over};
use shapmat::sweep::{self, Knob};
use shapmat::{dataset, synth};
use shapmat_core::TaskId;

#[derive(Parser)]
#[command(name = "shapmat", version, about = "Maintain player-by-task Shapley matrices under streaming updates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the self-valuation matrix over the initial players.
    Build(Run),
    /// Build, then replay the stream (or a saved event log).
    Stream {
        #[command(flatten)]
        run: Run,
        /// Replay this event log instead of the planned stream.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Recompute the final matrix from scratch with one estimator.
    Baseline {
        #[command(flatten)]
        run: Run,
        #[arg(long, value_enum, default_value = "global-mc")]
        estimator: Estimator,
    },
    /// Spearman and Pearson agreement between two matrix files.
    Eval {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Restrict to these task ids.
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<u32>,
    },
    /// Run the experiment once per grid value of one knob; prints CSV.
    Sweep {
        #[command(flatten)]
        run: Run,
        #[arg(long, value_enum)]
        knob: Knob,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
    /// Write a synthetic dataset as CSV.
    #[command(subcommand)]
    Synth(Synth),
}

#[derive(Subcommand)]
enum Synth {
    Blobs {
        #[arg(long, default_value_t = 3)]
        classes: u32,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Ring {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 2)]
        classes: u32,
        #[arg(long, default_value_t = 0)]
        chords: usize,
        #[arg(long)]
        seed: u64,
        /// Points CSV.
        #[arg(long)]
        out: PathBuf,
        /// Edge list CSV.
        #[arg(long)]
        edges: PathBuf,
    },
}

/// Config file plus command-line overrides of its fields.
#[derive(Args)]
struct Run {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Output directory for matrices, logs and reports.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    k_interp: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, conflicts_with = "anchor_ratio")]
    anchors: Option<usize>,
    #[arg(long)]
    anchor_ratio: Option<f64>,
    #[arg(long)]
    initial: Option<usize>,
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    players: Option<usize>,
    #[arg(long, value_enum)]
    reference: Option<Reference>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Reference {
    Exact,
    GlobalMc,
    None,
}

impl Run {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        }
        .with_seed(self.seed);
        let m = &mut cfg.maintenance;
        if let Some(v) = self.tau {
            m.tau = v;
        }
        if let Some(v) = self.kappa {
            m.kappa = v;
        }
        if let Some(v) = self.k_interp {
            m.k_interp = v;
        }
        if let Some(v) = self.k_max {
            m.k_max = v;
        }
        if self.anchors.is_some() || self.anchor_ratio.is_some() {
            cfg.anchors.count = self.anchors;
            cfg.anchors.ratio = self.anchor_ratio;
        }
        if self.initial.is_some() {
            cfg.stream.initial = self.initial;
        }
        if let Some(v) = self.tasks {
            cfg.stream.tasks = v;
            cfg.stream.task_fraction = None;
        }
        if let Some(v) = self.players {
            cfg.stream.players = v;
            cfg.stream.player_fraction = None;
        }
        if let Some(r) = self.reference {
            cfg.reference.mode = match r {
                Reference::Exact => ReferenceMode::Exact,
                Reference::GlobalMc => ReferenceMode::GlobalMc,
                Reference::None => ReferenceMode::None,
            };
        }
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

// a closed pipe (`| head`) is not an error worth reporting
fn print_json<T: serde::Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(run) => {
            let cfg = run.config()?;
            let plan = experiment::plan(&cfg)?;
            let (m, summary) = experiment::build(&cfg, &plan)?;
            if let Some(dir) = &cfg.output_dir {
                create_dir(dir)?;
                save_with_sidecar(m.matrix(), &experiment::sidecar_for(&cfg, &m), &dir.join("matrix.txt"))?;
                write_json(&summary, &dir.join("build_report.json"))?;
            }
            print_json(&summary);
        }
        Command::Stream { run, replay } => {
            let cfg = run.config()?;
            let events = replay
                .map(|p| load_events(&p).map(|r| r.into_iter().map(|e| e.event).collect()))
                .transpose()?;
            let outcome = experiment::run_stream_with(&cfg, events)?;
            match &outcome.metrics {
                Some(m) => print_json(m),
                None => print_json(&outcome.stream),
            }
        }
        Command::Baseline { run, estimator } => {
            let cfg = run.config()?;
            let (matrix, report) = experiment::baseline(&cfg, estimator)?;
            if let Some(dir) = &cfg.output_dir {
                create_dir(dir)?;
                shapmat::matrix_io::save_matrix(&matrix, &dir.join("baseline.txt"))?;
                write_json(&report, &dir.join("baseline_report.json"))?;
            }
            print_json(&report);
        }
        Command::Eval {
            estimate,
            reference,
            tasks,
        } => {
            let (est, _) = load_with_sidecar(&estimate)?;
            let (reference, _) = load_with_sidecar(&reference)?;
            let report = if tasks.is_empty() {
                metrics(&est, &reference)?
            } else {
                let tasks: Vec<TaskId> = tasks.into_iter().map(TaskId).collect();
                metrics_over(&est, &reference, &tasks)?
            };
            print_json(&report);
        }
        Command::Sweep { run, knob, grid } => {
            let cfg = run.config()?;
            let rows = sweep::sweep(&cfg, knob, &grid)?;
            let text = sweep::to_csv(&rows);
            if let Some(dir) = &cfg.output_dir {
                create_dir(dir)?;
                write_text(&dir.join("sweep.csv"), &text)?;
            }
            let _ = write!(std::io::stdout().lock(), "{text}");
        }
        Command::Synth(Synth::Blobs {
            classes,
            per_class,
            dim,
            separation,
            spread,
            seed,
            out,
        }) => {
            let spec = synth::BlobSpec {
                classes,
                per_class,
                dim,
                separation,
                spread,
            };
            write_text(&out, &dataset::write_points(&synth::blobs(&spec, seed)?))?;
        }
        Command::Synth(Synth::Ring {
            nodes,
            classes,
            chords,
            seed,
            out,
            edges,
        }) => {
            let (points, graph) = synth::ring(nodes, classes, chords, seed)?;
            write_text(&out, &dataset::write_points(&points))?;
            write_text(&edges, &dataset::write_edges(&graph))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
