//! Young's inequality at p = 1/2 on R: bounded for band-limited factors,
//! unbounded for shrinking indicators.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use conewave::cone::Cone;
use conewave::nilgroup::{Grid, GridFunction, SiegelData};
use conewave::sampling::{translated_bumps_symbol, young_check, young_check_grid};

fn main() -> conewave::Result<()> {
    let siegel = SiegelData::abelian(Cone::product(1)?);
    let grid = Grid::uniform(0, 1, 2, 1.0, 2048, 100.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let su = translated_bumps_symbol(&siegel.cone, &grid, &[1.0], &[2.0], 4, 10.0, &mut rng)?;
        let sv = translated_bumps_symbol(&siegel.cone, &grid, &[1.0], &[2.0], 4, 10.0, &mut rng)?;
        worst = worst.max(young_check(&siegel, &su, &sv, &grid, 0.5, 0.5, 0.5)?.ratio);
    }
    println!("band-limited factors: max ratio {worst:.4e}");

    for width in [1.0, 0.25, 0.0625] {
        let spike = GridFunction::from_fn(&grid, |g| Complex64::new(if (0.0..width).contains(&g.x[0]) { 1.0 } else { 0.0 }, 0.0));
        let r = young_check_grid(&siegel, &spike, &spike, 0.5, 0.5, 0.5)?;
        println!("indicator of width {width}: ratio {:.4e}", r.ratio);
    }
    Ok(())
}
