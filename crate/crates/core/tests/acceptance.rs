//! Acceptance criteria, one PASS/FAIL line each.  Exits with status 1 when any
//! criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::process::ExitCode;

use spmb::cli::{run_verify, Context, RunConfig};
use spmb::corrector::correct;
use spmb::energy::{energy_direct, find_optimal_radius, residual_surrogate, MultiBumpAnsatz, Probe};
use spmb::geometry::{inverse_distance_sum, radius_window, BumpConfiguration};
use spmb::groundstate::{find_ground_state, load_or_compute, GroundStateProfile, TestField};
use spmb::interactions::{default_fit_separations, fit_interaction, interaction_ep, linear_fit};
use spmb::potentials::{PotentialModel, PotentialVariant};
use spmb::Result;

type Check = Result<(bool, String)>;

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Non-increasing up to `resolution`, below which gaps are quadrature noise.
fn non_increasing(v: &[f64], resolution: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + resolution)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1() -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [2.0, 3.0, 4.0] {
        let u = find_ground_state(p, 1e-12)?;
        let e = u.energy_identity_residual();
        let poh = u.pohozaev_residual();
        let plateau = u.decay_plateau(u.r_max() - 5.0);
        ok &= e < 1e-4 && poh < 1e-3 && plateau < 0.01;
        detail.push(format!("p={p}: energy {e:.1e} pohozaev {poh:.1e} plateau {plateau:.1e}"));
    }
    Ok((ok, detail.join("; ")))
}

fn criterion_2(ctx: &Context) -> Check {
    let u = &ctx.profile;
    let q = u.quadratic_form_q(&TestField::Profile) / u.energy_norm_sq();
    let q1 = u.quadratic_form_q(&TestField::Derivative) / u.field_norm_sq(&TestField::Derivative);
    let ok = (q - (1.0 - 3.0)).abs() < 1e-3 && q1.abs() < 1e-3;
    Ok((ok, format!("Q[U]/‖U‖² = {q:.6}, Q[U_1]/‖U_1‖² = {q1:.2e}")))
}

fn criterion_3() -> Check {
    let gaps = [1_000usize, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&k| {
            let kf = k as f64;
            let r = 1.0;
            Ok((PI * r / (kf * kf.ln()) * inverse_distance_sum(k, r)?.exact - 1.0).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let ok = gaps[3] < 0.08 && gaps.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, format!("gaps {gaps:.4?}")))
}

fn criterion_4(ctx: &Context) -> Check {
    let u = &ctx.profile;
    let spec = ctx.config.quadrature;
    let separations = default_fit_separations();
    let fit = fit_interaction(u, &separations, &spec)?;
    let (x, y): (Vec<f64>, Vec<f64>) = fit
        .separations
        .iter()
        .zip(&fit.values)
        .map(|(&d, &i)| (d, (i * d).ln()))
        .unzip();
    let slope = linear_fit(&x, &y).0;
    let a = 10.0 * 10f64.exp() * interaction_ep(u, 10.0, &spec)?;
    let b = 12.0 * 12f64.exp() * interaction_ep(u, 12.0, &spec)?;
    let plateau = rel_gap(a, b);
    let prefactor = rel_gap(fit.prefactor, fit.analytic_prefactor);
    let ok = (slope + 1.0).abs() < 0.02 && plateau < 0.03 && prefactor < 0.03;
    Ok((
        ok,
        format!(
            "slope {slope:.5}, plateau gap {plateau:.2e}, C* {:.5} vs {:.5} ({prefactor:.2e})",
            fit.prefactor, fit.analytic_prefactor
        ),
    ))
}

fn criterion_5(ctx: &Context) -> Check {
    let model = ctx.model(Some(ctx.fit()?));
    let v = PotentialModel::new(PotentialVariant::Capped { cap: 1.0 }, 1.0, 2.0)?;
    let opts = ctx.config.field_options();
    let (mut kin, mut diag, mut cross) = (Vec::new(), Vec::new(), Vec::new());
    for k in [8, 12, 16] {
        let r = 2.0 / PI * k as f64 * (k as f64).ln();
        let ansatz = MultiBumpAnsatz::new(BumpConfiguration::new(k, r)?, &ctx.profile, v);
        let e = energy_direct(&ansatz, &model, &opts)?;
        kin.push(rel_gap(e.kinetic_cross, e.kinetic_cross_asymptotic));
        diag.push(rel_gap(e.nonlocal_diagonal, e.nonlocal_diagonal_asymptotic));
        cross.push(rel_gap(e.nonlocal_self_cross, e.nonlocal_self_cross_asymptotic));
    }
    let within = kin.iter().all(|&g| g < 0.10) && diag.iter().all(|&g| g < 0.20) && cross.iter().all(|&g| g < 0.30);
    let tol = ctx.config.quadrature.rel_tol;
    let monotone = non_increasing(&kin, tol) && non_increasing(&diag, tol) && non_increasing(&cross, tol);
    Ok((
        within && monotone,
        format!("kinetic {}, diagonal {}, self-cross {}", sci(&kin), sci(&diag), sci(&cross)),
    ))
}

fn criterion_6(ctx: &Context) -> Check {
    let config = &ctx.config;
    let m = config.m();
    let constants = ctx.constants()?;
    let model = ctx.model(Some(ctx.fit()?));
    let tested = [8usize, 12, 16, 25, 50, 100, 200];
    let mut optima = Vec::new();
    for &k in &tested {
        let window = radius_window(m, config.beta(), k)?;
        optima.push(find_optimal_radius(&window, &constants, m, &model, config.r_samples)?);
    }
    let k0 = (0..tested.len())
        .find(|&i| optima[i..].iter().all(|o| o.interior))
        .map(|i| tested[i]);
    let signs = match k0 {
        Some(k0) => optima.iter().filter(|o| o.k >= k0).all(|o| o.fbar_lo < 0.0 && o.fbar_hi > 0.0),
        None => false,
    };
    let target = m / PI;
    let ratios: Vec<f64> = optima.iter().filter(|o| o.k >= 25).map(|o| o.ratio).collect();
    let drift = ratios.windows(2).all(|w| (w[1] - target).abs() < (w[0] - target).abs());
    let interior: Vec<bool> = optima.iter().map(|o| o.interior).collect();
    let endpoint_signs: Vec<bool> = optima.iter().map(|o| o.fbar_lo < 0.0 && o.fbar_hi > 0.0).collect();
    Ok((
        k0.is_some() && signs && drift,
        format!(
            "k0 {k0:?}, tested {tested:?}, interior {interior:?}, endpoint signs {endpoint_signs:?}, \
             ratios over 25..200 {ratios:.4?} vs {target:.4}"
        ),
    ))
}

fn criterion_7(ctx: &Context) -> Check {
    let probes = Probe::default_set();
    let opts = ctx.config.field_options();
    let ks = [8usize, 12, 16, 24, 32, 48, 64];
    let mut values = Vec::new();
    for &k in &ks {
        let ansatz = ctx.ansatz(k, ctx.central_radius(k))?;
        values.push(residual_surrogate(&ansatz, &probes, &opts)?.value);
    }
    let x: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let slope = linear_fit(&x, &y).0;
    let bound = -(2.0 - 0.5) + 0.25;
    Ok((slope <= bound, format!("slope {slope:.3} (bound {bound})")))
}

fn criterion_8(ctx: &Context) -> Check {
    let probes = Probe::default_set();
    let opts = ctx.config.corrector_options();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut norms = Vec::new();
    for k in [8usize, 16, 32] {
        let rep = correct(&ctx.ansatz(k, ctx.central_radius(k))?, &probes, &opts)?;
        let f = &rep.fixed_point;
        norms.push(f.w_norm);
        if k == 8 {
            let s = &rep.spectral;
            let improved = rep.residual_after.value <= 0.2 * rep.residual_before.value;
            ok &= s.holds && f.converged && f.max_ratio < 0.5 && improved && f.min_corrected > 0.0;
            detail.push(format!(
                "k=8: Rayleigh {:.4}, complement {:.4}, ratio {:.2e}, residual {:.3e} -> {:.3e}, min {:.2e}",
                s.bump_rayleigh,
                s.c2_hat,
                f.max_ratio,
                rep.residual_before.value,
                rep.residual_after.value,
                f.min_corrected
            ));
        }
    }
    let x: Vec<f64> = [8.0f64, 16.0, 32.0].iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let slope = linear_fit(&x, &y).0;
    let bound = -(2.0 - 0.5) + 0.3;
    ok &= slope <= bound;
    detail.push(format!("‖w‖ slope {slope:.3} (bound {bound})"));
    Ok((ok, detail.join("; ")))
}

fn criterion_9() -> Check {
    let root = tempfile::tempdir()?;
    let mut reports = Vec::new();
    for run in ["first", "second"] {
        let config = RunConfig {
            out_dir: root.path().join(run),
            ..RunConfig::default()
        };
        let outcome = run_verify(&config)?;
        reports.push(fs::read(&outcome.files[0])?);
    }
    let identical = reports[0] == reports[1];

    let cache = root.path().join("cache");
    let settings = RunConfig::default().ground_state;
    let computed = load_or_compute(3.0, settings, Some(&cache))?;
    let cached = load_or_compute(3.0, settings, Some(&cache))?;
    let path = root.path().join("profile.spmbu");
    computed.write_to(&path)?;
    let read = GroundStateProfile::read_from(&path)?;
    let round_trip = [&cached, &read].iter().all(|p| {
        p.values() == computed.values()
            && p.derivatives() == computed.derivatives()
            && p.decay_constant() == computed.decay_constant()
    });
    Ok((
        identical && round_trip,
        format!("reports identical {identical} ({} bytes), cache round trip {round_trip}", reports[0].len()),
    ))
}

fn main() -> ExitCode {
    let ctx = match Context::new(&RunConfig::default()) {
        Ok(ctx) => ctx,
        Err(e) => {
            println!("FAIL setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("ground-state identities", Box::new(criterion_1)),
        ("nondegeneracy", Box::new(|| criterion_2(&ctx))),
        ("inverse distance sum", Box::new(criterion_3)),
        ("interaction decay", Box::new(|| criterion_4(&ctx))),
        ("term-wise energy", Box::new(|| criterion_5(&ctx))),
        ("landscape structure", Box::new(|| criterion_6(&ctx))),
        ("residual decay", Box::new(|| criterion_7(&ctx))),
        ("corrector", Box::new(|| criterion_8(&ctx))),
        ("determinism", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (passed, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!("{} {}. {name}: {detail}", if passed { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
