//! Direct evaluation of the energy of the multi-bump ansatz, term by term,
//! against the leading-order asymptotic families.

use spmb::cli::{Context, RunConfig};
use spmb::energy::{energy_direct, MultiBumpAnsatz};
use spmb::geometry::BumpConfiguration;
use spmb::potentials::{PotentialModel, PotentialVariant};

fn main() -> spmb::Result<()> {
    let config = RunConfig::default();
    let ctx = Context::new(&config)?;
    let model = ctx.model(Some(ctx.fit()?));
    let v = PotentialModel::new(PotentialVariant::Capped { cap: 1.0 }, 1.0, 2.0)?;
    for k in [8, 12, 16] {
        let r = ctx.central_radius(k);
        let ansatz = MultiBumpAnsatz::new(BumpConfiguration::new(k, r)?, &ctx.profile, v);
        let e = energy_direct(&ansatz, &model, &config.field_options())?;
        println!("k = {k}, r = {r:.3}: total {:.10e}", e.total);
        println!("  kinetic cross     {:.6e} vs {:.6e}", e.kinetic_cross, e.kinetic_cross_asymptotic);
        println!("  nonlocal diagonal {:.6e} vs {:.6e}", e.nonlocal_diagonal, e.nonlocal_diagonal_asymptotic);
        println!("  nonlocal cross    {:.6e} vs {:.6e}", e.nonlocal_self_cross, e.nonlocal_self_cross_asymptotic);
    }
    Ok(())
}
