//! Runs an experiment config over a range of seeds and prints one CSV row
//! per seed plus a summary line.
//!
//! `cargo run --release -p shapmat --example calibrate -- <config.toml> [seeds]`

use std::path::PathBuf;

use shapmat::config::ExperimentConfig;
use shapmat::experiment::run_stream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().ok_or("usage: calibrate <config.toml> [seeds]")?);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let base = ExperimentConfig::load(&path)?;
    println!("seed,spearman,pearson,omega,computed_tasks,build_trainings,stream_evaluations");
    let mut rho = Vec::new();
    let mut r = Vec::new();
    for seed in 0..seeds {
        let run = run_stream(&base.clone().with_seed(seed))?;
        let m = run.metrics.ok_or("config has no reference")?;
        println!(
            "{seed},{:.4},{:.4},{},{},{},{}",
            m.spearman,
            m.pearson,
            m.omega,
            run.stream.computed_tasks.len(),
            run.build.trainings,
            run.stream.utility_evaluations
        );
        rho.push(m.spearman);
        r.push(m.pearson);
    }
    let stats = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        (mean, min)
    };
    let (rm, rmin) = stats(&rho);
    let (pm, pmin) = stats(&r);
    println!("# spearman mean {rm:.4} min {rmin:.4}; pearson mean {pm:.4} min {pmin:.4}");
    Ok(())
}
