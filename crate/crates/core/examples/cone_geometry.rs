//! Generalized powers, transports, the invariant distance and Γ_Ω on the
//! Lorentz cone in R³.

use conewave::cone::{Cone, Side};

fn main() -> conewave::Result<()> {
    let cone = Cone::lorentz(3)?;
    println!("rank {}, invariant measure exponent d = {:?}", cone.rank, cone.d.0);

    let lambda = [2.0, 0.5, -0.7];
    let t = cone.transport_solve(&lambda)?;
    println!("transport of {lambda:?} has character vector {:?}", t.delta);
    println!("Δ′^(1, 2)(λ) = {:.6}", cone.delta_power(Side::Dual, &[1.0, 2.0], &lambda)?);

    let mu = [1.0, 0.0, 0.0];
    let d = cone.invariant_distance(Side::Dual, &lambda, &mu)?;
    let moved = cone.invariant_distance(Side::Dual, &t.act_dual(&lambda), &t.act_dual(&mu))?;
    println!("d(λ, e′) = {d:.12}, after moving both by t: {moved:.12}");

    for s in [[1.0, 1.0], [2.0, 1.5]] {
        println!("Γ_Ω({s:?}) = {:.10}", cone.gamma_cone(&s)?);
    }
    Ok(())
}
