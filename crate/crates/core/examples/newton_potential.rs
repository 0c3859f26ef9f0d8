//! Newton potential of `V U^2` and the Coulomb pairing of two displaced densities.

use spmb::energy::profile_square;
use spmb::groundstate::find_ground_state;
use spmb::potentials::{coulomb_pair_integral, phi_of_radial_source, NewtonPotential, PotentialModel, PotentialVariant};
use spmb::quadrature::QuadratureSpec;

fn main() -> spmb::Result<()> {
    let u = find_ground_state(3.0, 1e-12)?;
    let v = PotentialModel::new(PotentialVariant::Shifted, 1.0, 2.0)?;
    let phi = phi_of_radial_source(&u, &v)?;
    for r in [0.0, 1.0, 5.0, 20.0, 60.0] {
        println!("φ_U({r:>4}) = {:.10e}", phi.eval(r));
    }
    let rho = profile_square(&u)?;
    let newton = NewtonPotential::new(&rho)?;
    println!("∫U² = {:.8}", newton.total_charge());
    let spec = QuadratureSpec::default();
    for d in [0.0, 10.0, 40.0] {
        let pair = coulomb_pair_integral(&rho, &rho, d, &spec)?;
        let far = if d > 0.0 { newton.total_charge().powi(2) / d } else { f64::NAN };
        println!("∫U²(y) φ_U²(y - d e1) at d = {d:>4}: {pair:.8e}  (Q²/d = {far:.8e})");
    }
    Ok(())
}
