//! Interaction integral `I(d) = ∫U^p(y) U(y - d e1) dy` and its fit to `C* e^{-d}/d`.

use spmb::groundstate::find_ground_state;
use spmb::interactions::{default_fit_separations, fit_interaction, interaction_ep};
use spmb::quadrature::QuadratureSpec;

fn main() -> spmb::Result<()> {
    let u = find_ground_state(3.0, 1e-12)?;
    let spec = QuadratureSpec::default();
    for d in [6.0, 10.0, 14.0] {
        let i = interaction_ep(&u, d, &spec)?;
        println!("d = {d:>4}: I = {i:.8e}, d e^d I = {:.6}", d * d.exp() * i);
    }
    let fit = fit_interaction(&u, &default_fit_separations(), &spec)?;
    println!(
        "C* = {:.6} (analytic {:.6}), slope {:.5}, residual {:.2e}",
        fit.prefactor, fit.analytic_prefactor, fit.slope, fit.residual
    );
    Ok(())
}
