//! Regular k-gon configurations, the inverse distance sum and the radius window.

use spmb::geometry::{default_beta, inverse_distance_sum, radius_window, BumpConfiguration};

fn main() -> spmb::Result<()> {
    let c = BumpConfiguration::new(8, 20.0)?;
    println!("k = 8, r = 20: P_2 = {:?}, minimal gap {:.6}", c.position(1), c.min_gap());
    for k in [1_000usize, 10_000, 100_000, 1_000_000] {
        let s = inverse_distance_sum(k, 1.0)?;
        println!("k = {k:>7}: exact {:.6e}, folded {:.6e}, k log k / π {:.6e}", s.exact, s.folded, s.asymptotic);
    }
    let m = 2.0;
    for k in [8, 16, 64] {
        let w = radius_window(m, default_beta(m), k)?;
        println!("k = {k:>3}: window [{:.3}, {:.3}]", w.lo, w.hi);
    }
    Ok(())
}
