//! A (δ, R)-lattice on an annulus of the quadrant and its partitions of unity.

use conewave::cone::{Cone, Region};
use conewave::lattice::{build_bumps, build_lattice, verify_lattice, BumpMode};

fn main() -> conewave::Result<()> {
    let cone = Cone::product(2)?;
    let region = Region::new(0.5, 2.0, 0.5)?;
    let spec = build_lattice(&cone, 0.3, &region)?;
    let report = verify_lattice(&cone, &spec)?;
    println!(
        "{} points, R = {:.3}, min separation / δ = {:.3}, max overlap {}, passed {}",
        report.points,
        report.r,
        report.min_separation / report.delta,
        report.max_overlap,
        report.passed
    );

    let probe = [1.1, 0.9];
    for mode in [BumpMode::Cover, BumpMode::Partition, BumpMode::PartitionSq] {
        let bumps = build_bumps(&cone, &spec, mode)?;
        let (sum, sum_sq) = bumps.sums(&probe);
        println!("{mode:?}: Σφ = {sum:.12}, Σφ² = {sum_sq:.12}");
    }
    Ok(())
}
