//! Ground state of `-Δu + u = u^p` for `p ∈ {2, 3, 4}` and its identities.

use spmb::groundstate::{find_ground_state, TestField};

fn main() -> spmb::Result<()> {
    for p in [2.0, 3.0, 4.0] {
        let u = find_ground_state(p, 1e-12)?;
        let q = u.quadratic_form_q(&TestField::Profile) / u.energy_norm_sq();
        println!(
            "p = {p}: U(0) = {:.12}, ‖U‖² = {:.6}, C = {:.6}, energy identity {:.1e}, Pohozaev {:.1e}, Q[U]/‖U‖² = {:.6}",
            u.center_value(),
            u.energy_norm_sq(),
            u.decay_constant(),
            u.energy_identity_residual(),
            u.pohozaev_residual(),
            q,
        );
    }
    Ok(())
}
