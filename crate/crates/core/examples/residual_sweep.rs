//! Weak residual of the ansatz against test probes, decaying in k.

use spmb::cli::{Context, RunConfig};
use spmb::energy::{residual_surrogate, Probe};

fn main() -> spmb::Result<()> {
    let config = RunConfig::default();
    let ctx = Context::new(&config)?;
    let probes = Probe::default_set();
    for k in [8, 16, 32, 64] {
        let r = ctx.central_radius(k);
        let rep = residual_surrogate(&ctx.ansatz(k, r)?, &probes, &config.field_options())?;
        let parts: Vec<String> = rep.probes.iter().map(|p| format!("{} {:.3e}", p.probe, p.value)).collect();
        println!("k = {k:>2}: residual {:.4e} [{}]", rep.value, parts.join(", "));
    }
    Ok(())
}
