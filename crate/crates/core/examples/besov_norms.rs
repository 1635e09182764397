//! Analytic-type Besov norm of a random band-limited function next to the
//! classical dyadic norm, and the embedding B^0_{1,1} ⊂ B^{(b+d)/2}_{2,2}.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use conewave::besov::{besov_analytic, besov_classical_symbol, embedding_ratio, BesovParams, Decomposition};
use conewave::cone::{Cone, PowerExponent, Region};
use conewave::experiments::random_symbol;
use conewave::lattice::{build_bumps, build_lattice, BumpMode};
use conewave::nilgroup::SiegelData;
use conewave::spectral::GridPlan;

fn main() -> conewave::Result<()> {
    let siegel = SiegelData::abelian(Cone::product(1)?);
    let cone = &siegel.cone;
    let spec = build_lattice(cone, 0.3, &Region::new(0.3, 3.5, 0.0)?)?;
    let bumps = build_bumps(cone, &spec, BumpMode::Partition)?;
    let plan = GridPlan::for_dim(1);
    let dec = Decomposition::new(&siegel, &spec, bumps, &plan)?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sigma = random_symbol(cone, 1.0, 0.6, 4, 5.0, &mut rng)?;
    let s = PowerExponent(vec![0.5]);
    let params = BesovParams::new(s.clone(), 2.0, 2.0)?;
    let analytic = besov_analytic(&dec, &sigma, &params, false)?;
    let classical = besov_classical_symbol(&siegel, &sigma, s.sum(), 2.0, 2.0, &plan)?;
    println!(
        "analytic {:.6e} over {} pieces, classical {:.6e}",
        analytic.total,
        analytic.per_index.len(),
        classical.total
    );

    let source = BesovParams::new(PowerExponent::zeros(1), 1.0, 1.0)?;
    let target = BesovParams::new(siegel.b.add(&cone.d).scale(0.5), 2.0, 2.0)?;
    let e = embedding_ratio(&dec, &sigma, &source, &target)?;
    println!("embedding ratio {:.6}", e.ratio);
    Ok(())
}
