//! Riemann–Liouville symbols: composing exponents adds them.

use num_complex::Complex64;

use conewave::cone::{Cone, PowerExponent};
use conewave::nilgroup::Grid;
use conewave::spectral::{riemann_liouville, PowerReading, ScalarSymbol};

fn main() -> conewave::Result<()> {
    let cone = Cone::product(2)?;
    let grid = Grid::new(vec![], vec![], vec![64, 64], vec![8.0, 8.0])?;
    let sigma = ScalarSymbol::sample_region(&cone, &grid, &[0.5, 0.5], &[3.0, 3.0], |l| Complex64::new(1.0 / (1.0 + l[0] * l[1]), 0.0))?;
    let a = PowerExponent(vec![0.5, -0.25]);
    let b = PowerExponent(vec![0.25, 1.0]);
    let twice = riemann_liouville(&cone, &riemann_liouville(&cone, &sigma, &a, PowerReading::DualPower)?, &b, PowerReading::DualPower)?;
    let once = riemann_liouville(&cone, &sigma, &a.add(&b), PowerReading::DualPower)?;
    let err = twice.values.iter().zip(&once.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    println!("{} samples, max |I^b I^a σ − I^(a+b) σ| = {err:.2e}", sigma.len());
    Ok(())
}
