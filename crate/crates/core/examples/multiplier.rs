//! Δ^{iτ} acting on random band-limited functions, next to its Mihlin-type
//! seminorm.

use conewave::experiments::{mihlin_seminorm, run, ExperimentConfig, ExperimentKind};

const CONFIG: &str = r#"
experiment = "multiplier"
seed = 2
trials = 8

[cone]
kind = "product"
dim = 1

[lattice]
delta = 0.3
region = { scale = [0.4, 2.5], spread = 0.0 }

[besov]
p = 1.5
q = 1.5

[multiplier]
multiplier = { kind = "delta_power", tau = [2.0] }
p0 = 1.5
"#;

fn main() -> conewave::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let mc = cfg.multiplier.clone().expect("multiplier table");
    let (seminorm, _) = mihlin_seminorm(&cfg.cone.build()?, &mc, cfg.seed)?;
    let report = run(ExperimentKind::Multiplier, &cfg)?;
    println!(
        "seminorm {seminorm:.4}, ratios in [{:.4}, {:.4}]",
        report.summary.min, report.summary.max
    );
    Ok(())
}
