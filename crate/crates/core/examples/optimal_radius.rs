//! Reduced energy over the radius window and its maximiser for several k.

use spmb::cli::{Context, RunConfig};
use spmb::energy::find_optimal_radius;
use spmb::geometry::radius_window;

fn main() -> spmb::Result<()> {
    let config = RunConfig::default();
    let ctx = Context::new(&config)?;
    let constants = ctx.constants()?;
    println!("B1 = {:.4}, B2 = {:.4}, ‖U‖² = {:.4}", constants.b1, constants.b2, constants.energy_norm_sq);
    let model = ctx.model(Some(ctx.fit()?));
    for k in [16, 25, 50, 100, 200] {
        let window = radius_window(config.m(), config.beta(), k)?;
        let opt = find_optimal_radius(&window, &constants, config.m(), &model, config.r_samples)?;
        println!(
            "k = {k:>3}: r_k = {:.3}, r_k/(k log k) = {:.5}, interior {}, F̄(lo) = {:.3e}, F̄(hi) = {:.3e}",
            opt.r, opt.ratio, opt.interior, opt.fbar_lo, opt.fbar_hi
        );
    }
    println!("target m/π = {:.5}", config.m() / std::f64::consts::PI);
    Ok(())
}
