//! The degenerating family t_k on the quadrant: analytic norms scale like
//! Δ^{−s}(t_k), so the s = (1/2, 0) norm grows like √(k+1).

use conewave::experiments::{run, ExperimentConfig, ExperimentKind};

const CONFIG: &str = r#"
experiment = "blowup"

[cone]
kind = "product"
dim = 2

[lattice]
delta = 0.3
bumps = "partition_sq"

[besov]
s = [0.5, 0.0]
p = 2.0
q = 2.0

[blowup]
k_max = 24
k_step = 4
"#;

fn main() -> conewave::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let report = run(ExperimentKind::Blowup, &cfg)?;
    if let Some(t) = &report.trajectory {
        for (x, y) in t.x.iter().zip(&t.y) {
            println!("{} = {x:>3}: ratio {y:.6}", t.x_label);
        }
        println!("log-log slope {:.4}", t.slope.unwrap_or(f64::NAN));
    }
    Ok(())
}
