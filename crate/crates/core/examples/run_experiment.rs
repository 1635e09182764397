//! Run a configured experiment in-process and print its checks:
//! `cargo run --release --example run_experiment -- configs/decoupling_r1.toml`.

use std::path::PathBuf;

use conewave::experiments::{run, ExperimentConfig};

fn main() -> conewave::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/decoupling_r1.toml"));
    let cfg = ExperimentConfig::load(&path)?;
    let kind = cfg.experiment.ok_or_else(|| conewave::Error::Config("the config names no experiment".into()))?;
    let report = run(kind, &cfg)?;
    println!("{}: {} rows, ratio in [{:.6}, {:.6}]", report.experiment, report.summary.count, report.summary.min, report.summary.max);
    for c in &report.checks {
        println!("  {} {} = {:.4e} ({})", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
    }
    Ok(())
}
