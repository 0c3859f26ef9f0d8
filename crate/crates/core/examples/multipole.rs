//! Axisymmetric multipole solver: potential of an off-centre density and its pairing.

use spmb::multipole::{AxialGrid, AxialGridSpec};

fn main() -> spmb::Result<()> {
    let grid = AxialGrid::new(AxialGridSpec::default())?;
    let gaussian = grid.source(|s, mu| (-(s * s - 2.0 * s * mu + 1.0)).exp());
    let phi = grid.potential(&gaussian);
    println!("nodes {}, l_max {}, charge {:.10}", grid.len(), grid.l_max(), grid.charge(&gaussian));
    for (s, mu) in [(0.0, 1.0), (1.0, 1.0), (1.0, -1.0), (30.0, 0.0)] {
        println!("φ({s}, {mu}) = {:.10e}", phi.eval(s, mu));
    }
    println!("self energy ∫ρφ = {:.10e}", grid.pairing(&gaussian, &phi));
    Ok(())
}
