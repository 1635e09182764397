//! Upper and lower sampling bounds for a band-limited function on R².

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use conewave::cone::Cone;
use conewave::nilgroup::{Grid, SiegelData};
use conewave::sampling::{sample_bounds, translated_bumps_symbol, GroupLattice};
use conewave::spectral::synthesize;

fn main() -> conewave::Result<()> {
    let siegel = SiegelData::abelian(Cone::product(2)?);
    let grid = Grid::uniform(0, 2, 2, 1.0, 384, 6.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sym = translated_bumps_symbol(&siegel.cone, &grid, &[1.0, 1.0], &[2.0, 2.0], 4, 3.0, &mut rng)?;
    let u = synthesize(&siegel, &sym, &grid)?;
    for delta in [1.0, 0.5, 0.4] {
        let lattice = GroupLattice::regular(&siegel, &grid, delta)?;
        let b = sample_bounds(&siegel, &u, &lattice, 2.0)?;
        println!(
            "δ = {delta}: {} points, lower {:.4e} ≤ true {:.4e}, upper {:.4e}",
            lattice.len(),
            b.lower,
            b.true_norm,
            b.upper
        );
    }
    Ok(())
}
