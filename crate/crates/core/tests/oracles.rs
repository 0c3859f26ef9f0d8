//! Independent oracles for the numerical building blocks.

use std::f64::consts::PI;
use std::sync::OnceLock;

use spmb::cli::{Context, RunConfig};
use spmb::energy::{energy_direct, residual_surrogate, FieldOptions, MultiBumpAnsatz, Probe};
use spmb::geometry::BumpConfiguration;
use spmb::groundstate::{find_ground_state, find_ground_state_with, GroundStateProfile, GroundStateSettings};
use spmb::interactions::{
    default_fit_separations, fit_interaction, interaction_ep, linear_fit, InteractionModel, FAST_THRESHOLD,
};
use spmb::potentials::{coulomb_pair_integral, PotentialModel, PotentialVariant, RadialDensity};
use spmb::quadrature::QuadratureSpec;

fn cubic() -> &'static GroundStateProfile {
    static PROFILE: OnceLock<GroundStateProfile> = OnceLock::new();
    PROFILE.get_or_init(|| find_ground_state(3.0, 1e-12).unwrap())
}

fn shifted() -> PotentialModel {
    PotentialModel::new(PotentialVariant::Shifted, 1.0, 2.0).unwrap()
}

#[test]
fn centre_value_converges_at_least_quadratically_in_h() {
    let centre = |h: f64| {
        find_ground_state_with(3.0, GroundStateSettings { h, r_max: 30.0, tol: 1e-13 })
            .unwrap()
            .center_value()
    };
    let (a, b, c) = (centre(4e-2), centre(2e-2), centre(1e-2));
    let order = ((a - b) / (b - c)).abs().log2();
    assert!(order >= 1.8, "observed order {order}");
}

#[test]
fn field_difference_is_lipschitz_in_the_amplitude() {
    // Sources V ((1+ε)U)^2 - V U^2 paired against themselves give the
    // squared energy seminorm of φ_{(1+ε)U} - φ_U.
    let u = cubic();
    let v = shifted();
    let spec = QuadratureSpec::default().with_rel_tol(1e-9);
    let eps = [1e-1, 1e-2, 1e-3];
    let norms: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let scale = (1.0 + e) * (1.0 + e) - 1.0;
            let base = RadialDensity::from_profile(u, 2.0, &v).unwrap();
            let diff = RadialDensity::new(
                base.step(),
                base.values().iter().map(|x| x * scale).collect(),
                base.tail(),
            )
            .unwrap();
            coulomb_pair_integral(&diff, &diff, 0.0, &spec).unwrap().sqrt()
        })
        .collect();
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let slope = linear_fit(&x, &y).0;
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn interaction_decreases_strictly_in_separation() {
    let spec = QuadratureSpec::default();
    let values: Vec<f64> = (0..=16).map(|i| interaction_ep(cubic(), i as f64, &spec).unwrap()).collect();
    assert!((values[0] - cubic().energy_norm_sq()).abs() < 1e-5 * values[0]);
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn fast_mode_agrees_with_quadrature_beyond_threshold() {
    let spec = QuadratureSpec::default();
    let fit = fit_interaction(cubic(), &default_fit_separations(), &spec).unwrap();
    let fast = InteractionModel::fast(cubic(), fit, spec);
    let slow = InteractionModel::quadrature(cubic(), spec);
    for i in 0..=8 {
        let d = FAST_THRESHOLD + 0.5 * i as f64;
        let (a, b) = (fast.value(d).unwrap(), slow.value(d).unwrap());
        assert!((a - b).abs() < 0.02 * b, "d = {d}: {a} vs {b}");
    }
}

#[test]
fn field_norm_is_bounded_by_k_over_r_to_the_m() {
    // Upper bound ‖φ_z‖ ≤ C k / r^m along the central radii.
    let config = RunConfig::default();
    let ctx = Context::new(&config).unwrap();
    let model = ctx.model(Some(ctx.fit().unwrap()));
    let mut scaled = Vec::new();
    for k in [8usize, 12, 16, 24] {
        let r = ctx.central_radius(k);
        let a = MultiBumpAnsatz::new(BumpConfiguration::new(k, r).unwrap(), cubic(), shifted());
        let e = energy_direct(&a, &model, &config.field_options()).unwrap();
        scaled.push(e.field_norm * r.powf(2.0) / k as f64);
    }
    assert!(scaled.windows(2).all(|w| w[1] <= w[0]), "{scaled:?}");
}

#[test]
fn single_bump_energy_matches_radial_formula() {
    let u = cubic();
    let v = shifted();
    let a = MultiBumpAnsatz::new(BumpConfiguration::single(0.0).unwrap(), u, v);
    let spec = QuadratureSpec::default();
    let model = InteractionModel::quadrature(u, spec);
    let e = energy_direct(&a, &model, &FieldOptions::default()).unwrap();
    let rho = RadialDensity::from_profile(u, 2.0, &v).unwrap();
    let nonlocal = 0.25 * coulomb_pair_integral(&rho, &rho, 0.0, &spec.with_rel_tol(1e-9)).unwrap();
    let expected = 0.5 * u.energy_norm_sq() + nonlocal - u.integral_moment(4.0) / 4.0;
    assert!((e.total - expected).abs() < 1e-4 * expected.abs(), "{} vs {expected}", e.total);
}

#[test]
fn residual_is_stable_under_quadrature_refinement() {
    let ctx_r = 2.0 / PI * 12.0 * 12f64.ln();
    let a = MultiBumpAnsatz::new(BumpConfiguration::new(12, ctx_r).unwrap(), cubic(), shifted());
    let coarse = FieldOptions::default();
    let fine = FieldOptions {
        sector: coarse.sector.refined(),
        spec: coarse.spec.with_max_evals(2 * coarse.spec.max_evals),
        ..coarse
    };
    let probes = Probe::default_set();
    let x = residual_surrogate(&a, &probes, &coarse).unwrap().value;
    let y = residual_surrogate(&a, &probes, &fine).unwrap().value;
    assert!((x - y).abs() < 0.05 * y, "{x} vs {y}");
}
