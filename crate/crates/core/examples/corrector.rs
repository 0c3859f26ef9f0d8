//! Galerkin corrector: symmetric basis, projected system, spectral split and
//! the fixed-point iteration for `w`.

use spmb::cli::{Context, RunConfig};
use spmb::corrector::correct;
use spmb::energy::Probe;

fn main() -> spmb::Result<()> {
    let config = RunConfig::default();
    let ctx = Context::new(&config)?;
    let k = 8;
    let ansatz = ctx.ansatz(k, ctx.central_radius(k))?;
    let rep = correct(&ansatz, &Probe::default_set(), &config.corrector_options())?;
    let s = &rep.spectral;
    let f = &rep.fixed_point;
    println!("basis {} functions, Gram condition {:.2e}", rep.basis_size, rep.gram_condition);
    println!("bump Rayleigh {:.5}, complement floor {:.4}, inverse bound {:.3}", s.bump_rayleigh, s.c2_hat, s.inverse_bound);
    for it in &f.history {
        println!("  {it:?}");
    }
    println!("‖w‖ = {:.4e}, ‖z‖ = {:.4}, min(z + w) = {:.3e}", f.w_norm, f.z_norm, f.min_corrected);
    println!("residual {:.4e} -> {:.4e}", rep.residual_before.value, rep.residual_after.value);
    Ok(())
}
