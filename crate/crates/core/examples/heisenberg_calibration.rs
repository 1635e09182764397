//! Inversion and Plancherel constants measured on grids, for the line and
//! for the Heisenberg group.

use conewave::cone::Cone;
use conewave::nilgroup::{Grid, SiegelData};
use conewave::spectral::calibrate_constants;

fn main() -> conewave::Result<()> {
    let line = SiegelData::abelian(Cone::product(1)?);
    let grid = Grid::uniform(0, 1, 2, 1.0, 256, 40.0)?;
    let cal = calibrate_constants(&line, &grid)?;
    println!("R: c_inversion = {:.12} (1/2π = {:.12})", cal.c_inversion, 0.5 / std::f64::consts::PI);

    let heisenberg = SiegelData::heisenberg(1)?;
    let grid = Grid::uniform(1, 1, 32, 6.0, 64, 40.0)?;
    let cal = calibrate_constants(&heisenberg, &grid)?;
    println!(
        "H¹: c_plancherel = {:.8}, closed form {:.8}, residuals {:.1e} / {:.1e}",
        cal.c_plancherel, cal.closed_form, cal.inversion_residual, cal.plancherel_residual
    );
    Ok(())
}
