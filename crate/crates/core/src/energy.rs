//! Multi-bump ansatz, its energy, the reduced energy and the residual surrogate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{bump_source, polar, ring_field, ring_potential, LocalField, RingFrame};
use crate::geometry::{BumpConfiguration, RadiusWindow};
use crate::groundstate::GroundStateProfile;
use crate::interactions::{ring_interaction_sum, InteractionModel, GAP_FLOOR};
use crate::multipole::{AxialGrid, AxialGridSpec, AxialPotential};
use crate::potentials::{coulomb_pair_integral, PotentialModel, RadialDensity};
use crate::quadrature::QuadratureSpec;
use crate::sector::{SectorGrid, SectorResolution};

/// `z_r(x) = \sum_j U(|x - P_j|)` for a configuration, profile and potential.
#[derive(Debug, Clone, Copy)]
pub struct MultiBumpAnsatz<'a> {
    pub config: BumpConfiguration,
    pub profile: &'a GroundStateProfile,
    pub potential: PotentialModel,
}

impl<'a> MultiBumpAnsatz<'a> {
    pub fn new(config: BumpConfiguration, profile: &'a GroundStateProfile, potential: PotentialModel) -> Self {
        Self {
            config,
            profile,
            potential,
        }
    }
}

/// `z_r(x)` summed over all bumps.
pub fn evaluate_ansatz(ansatz: &MultiBumpAnsatz<'_>, x: &[f64; 3]) -> f64 {
    ansatz
        .config
        .positions()
        .iter()
        .map(|p| {
            let d = ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2)).sqrt();
            ansatz.profile.eval(d)
        })
        .sum()
}

/// Constants of the reduced energy `k [C0 + B1/r^{2m} + B2 k log k / r^{2m+1} - B3 \sum I]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedConstants {
    pub p: f64,
    /// `(1/2 - 1/(p+1)) \int U^{p+1}`.
    pub c0: f64,
    /// `(1/4) \int\int U^2(x) U^2(y) / |x - y|`.
    pub b1: f64,
    /// `(\int U^2)^2 / (4π)`.
    pub b2: f64,
    /// `1/2`.
    pub b3: f64,
    /// `‖U‖^2`.
    pub energy_norm_sq: f64,
    /// `\int U^2`.
    pub mass: f64,
    /// `\int U^{p+1}`.
    pub nonlinear_moment: f64,
    /// `\int\int U^2(x) U^2(y) / |x - y|`.
    pub coulomb_self: f64,
}

impl ReducedConstants {
    /// Copy with the nonlocal constants scaled by `a^2` for `V ~ a / r^m`.
    pub fn scaled_for_amplitude(&self, a: f64) -> Self {
        Self {
            b1: self.b1 * a * a,
            b2: self.b2 * a * a,
            ..*self
        }
    }
}

/// `U^2` on the profile grid with its exponential tail.
pub fn profile_square(profile: &GroundStateProfile) -> Result<RadialDensity> {
    RadialDensity::from_profile(profile, 2.0, &PotentialModel::constant(1.0))
}

pub fn reduced_constants(profile: &GroundStateProfile, spec: &QuadratureSpec) -> Result<ReducedConstants> {
    let p = profile.exponent();
    let u2 = profile_square(profile)?;
    let coulomb_self = coulomb_pair_integral(&u2, &u2, 0.0, spec)?;
    let mass = profile.integral_moment(2.0);
    let nonlinear_moment = profile.integral_moment(p + 1.0);
    Ok(ReducedConstants {
        p,
        c0: (0.5 - 1.0 / (p + 1.0)) * nonlinear_moment,
        b1: 0.25 * coulomb_self,
        b2: mass * mass / (4.0 * PI),
        b3: 0.5,
        energy_norm_sq: profile.energy_norm_sq(),
        mass,
        nonlinear_moment,
        coulomb_self,
    })
}

/// Reduced energy at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedEnergy {
    /// `k (C0 + F̄)`.
    pub total: f64,
    /// `F̄ = B1/r^{2m} + B2 k log k / r^{2m+1} - B3 \sum_i I(d_i)`.
    pub fbar: f64,
}

pub fn reduced_energy(
    k: usize,
    r: f64,
    constants: &ReducedConstants,
    m: f64,
    model: &InteractionModel<'_>,
) -> Result<ReducedEnergy> {
    let config = BumpConfiguration::new(k, r)?;
    let kf = k as f64;
    let ring = ring_interaction_sum(&config, model)?;
    let fbar = constants.b1 / r.powf(2.0 * m) + constants.b2 * kf * kf.ln() / r.powf(2.0 * m + 1.0)
        - constants.b3 * ring;
    Ok(ReducedEnergy {
        total: kf * (constants.c0 + fbar),
        fbar,
    })
}

/// Maximiser of `F̄` over a radius window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalRadius {
    pub k: usize,
    pub r: f64,
    pub fbar: f64,
    /// `r / (k log k)`.
    pub ratio: f64,
    /// True when the maximiser is farther than 1% of the width from both ends.
    pub interior: bool,
    pub fbar_lo: f64,
    pub fbar_hi: f64,
}

/// Golden-section maximisation of `f` on `[a, b]`.
pub fn golden_section_max(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Samples `F̄` on the window and refines the best sample by golden section.
pub fn find_optimal_radius(
    window: &RadiusWindow,
    constants: &ReducedConstants,
    m: f64,
    model: &InteractionModel<'_>,
    samples: usize,
) -> Result<OptimalRadius> {
    let k = window.k;
    let radii = window.samples(samples.max(3));
    let values = radii
        .iter()
        .map(|&r| reduced_energy(k, r, constants, m, model).map(|e| e.fbar))
        .collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let a = radii[best.saturating_sub(1)];
    let b = radii[(best + 1).min(radii.len() - 1)];
    let (mut r, mut fbar) = golden_section_max(
        |r| reduced_energy(k, r, constants, m, model).map(|e| e.fbar),
        a,
        b,
        1e-9 * window.hi,
    )?;
    if values[best] > fbar {
        r = radii[best];
        fbar = values[best];
    }
    let margin = 0.01 * window.width();
    Ok(OptimalRadius {
        k,
        r,
        fbar,
        ratio: window.ratio(r),
        interior: r - window.lo > margin && window.hi - r > margin,
        fbar_lo: values[0],
        fbar_hi: *values.last().unwrap(),
    })
}

/// Resolution settings shared by the direct energy and the residual surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldOptions {
    pub spec: QuadratureSpec,
    pub sector: SectorResolution,
    pub axial: AxialGridSpec,
    /// Bumps on each side of `P_1` included in local sums.
    pub neighbours: usize,
    /// Separation beyond which the `U^2` pairing is replaced by `(\int U^2)^2 / d`.
    pub pair_far: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self {
            spec: QuadratureSpec::default(),
            sector: SectorResolution::default(),
            axial: AxialGridSpec::default(),
            neighbours: 2,
            pair_far: 20.0,
        }
    }
}

/// Direct evaluation of the energy of the ansatz, term by term, with the
/// leading-order counterparts of each term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub k: usize,
    pub r: f64,
    /// `½‖z_r‖^2`.
    pub kinetic_mass: f64,
    /// `¼ \int V φ_z z^2`.
    pub nonlocal: f64,
    /// `1/(p+1) \int z^{p+1}`.
    pub nonlinear: f64,
    pub total: f64,
    /// `(k/2) \sum_i I(d_i)`.
    pub kinetic_cross: f64,
    /// `(k/2) \sum_i C* e^{-d_i}/d_i`.
    pub kinetic_cross_asymptotic: f64,
    /// `\sum_i \int V φ_{U_{P_i}} U_{P_i}^2`.
    pub nonlocal_diagonal: f64,
    /// `k a^2 4 B1 / r^{2m}`.
    pub nonlocal_diagonal_asymptotic: f64,
    /// `\sum_{i≠j} V(P_i) V(P_j) \int\int U_{P_i}^2 U_{P_j}^2 / |x-y|`.
    pub nonlocal_self_cross: f64,
    /// `k a^2 4 B2 k log k / r^{2m+1}`.
    pub nonlocal_self_cross_asymptotic: f64,
    /// `k/(p+1) [\int U^{p+1} + (p+1) \sum_i C* e^{-d_i}/d_i]`.
    pub nonlinear_asymptotic: f64,
    /// Estimate of the terms dropped by the direct evaluation.
    pub neglected_bound: f64,
    /// `‖φ_z‖ = (\int V φ_z z^2)^{1/2}`.
    pub field_norm: f64,
}

pub fn energy_direct(
    ansatz: &MultiBumpAnsatz<'_>,
    model: &InteractionModel<'_>,
    opts: &FieldOptions,
) -> Result<EnergyBreakdown> {
    let config = ansatz.config;
    let profile = ansatz.profile;
    let v = &ansatz.potential;
    let k = config.count();
    let kf = k as f64;
    let r = config.radius();
    let p = profile.exponent();
    if k >= 2 && config.min_gap() < GAP_FLOOR {
        return Err(Error::GapTooSmall {
            gap: config.min_gap(),
            floor: GAP_FLOOR,
        });
    }
    let distances: Vec<(f64, f64)> = (1..=k / 2)
        .map(|j| (config.distance_from_first(j), if 2 * j == k { 1.0 } else { 2.0 }))
        .collect();

    let ring = ring_interaction_sum(&config, model)?;
    let ring_asym: f64 = distances.iter().map(|&(d, w)| w * model.asymptotic(d)).sum();
    let kinetic_cross = 0.5 * kf * ring;
    let kinetic_mass = 0.5 * kf * profile.energy_norm_sq() + kinetic_cross;

    let grid = AxialGrid::new(opts.axial)?;
    let source = bump_source(&grid, r, v, |s, _| profile.eval(s));
    let bump_pot = grid.potential(&source);
    let diag = grid.pairing(&source, &bump_pot);
    let diag_coarse = grid.pairing_truncated(&source, &bump_pot, grid.l_max() / 2);

    let u2 = profile_square(profile)?;
    let mass = profile.integral_moment(2.0);
    let coulomb_self = coulomb_pair_integral(&u2, &u2, 0.0, &opts.spec)?;
    let mut pair_sum = 0.0;
    for &(d, w) in &distances {
        let pair = if d > opts.pair_far {
            mass * mass / d
        } else {
            coulomb_pair_integral(&u2, &u2, d, &opts.spec)?
        };
        pair_sum += w * pair;
    }
    let vr = v.value(r);
    let self_cross = kf * vr * vr * pair_sum;
    let nonlocal = 0.25 * (kf * diag + self_cross);

    let m = -v.far_power();
    let a2 = v.a * v.a;
    let diag_asym = kf * a2 * coulomb_self / r.powf(2.0 * m);
    let self_cross_asym = if k >= 2 {
        kf * a2 * mass * mass * kf * kf.ln() / (PI * r.powf(2.0 * m + 1.0))
    } else {
        0.0
    };

    let frame = RingFrame::new(config, opts.neighbours);
    let sector = SectorGrid::wedge(&config, &[], &opts.sector, opts.spec.max_evals)?;
    let z_at = |x: &[f64; 3]| -> f64 {
        frame
            .near()
            .iter()
            .map(|&j| profile.eval(polar(&frame.local(j, x)).0))
            .sum()
    };
    let nonlinear = sector.integrate(|x| z_at(x).powf(p + 1.0)) / (p + 1.0);
    let nonlinear_moment = profile.integral_moment(p + 1.0);
    let nonlinear_asymptotic = kf / (p + 1.0) * (nonlinear_moment + (p + 1.0) * ring_asym);

    let far_interaction: f64 = (1..=k / 2)
        .filter(|&j| j > opts.neighbours)
        .map(|j| {
            let w = if 2 * j == k { 1.0 } else { 2.0 };
            w * model.asymptotic(config.distance_from_first(j))
        })
        .sum();
    let decay: f64 = distances.iter().map(|&(d, w)| w * (-0.9 * d).exp()).sum();
    let mixed = kf * diag.max(0.0).sqrt() * decay + (kf * decay).powi(2);
    let neglected_bound = kf * far_interaction + 0.25 * mixed + 0.25 * kf * (diag - diag_coarse).abs();

    Ok(EnergyBreakdown {
        k,
        r,
        kinetic_mass,
        nonlocal,
        nonlinear,
        total: kinetic_mass + nonlocal - nonlinear,
        kinetic_cross,
        kinetic_cross_asymptotic: 0.5 * kf * ring_asym,
        nonlocal_diagonal: kf * diag,
        nonlocal_diagonal_asymptotic: diag_asym,
        nonlocal_self_cross: self_cross,
        nonlocal_self_cross_asymptotic: self_cross_asym,
        nonlinear_asymptotic,
        neglected_bound,
        field_norm: (4.0 * nonlocal).max(0.0).sqrt(),
    })
}

/// Test directions for the residual surrogate, symmetrised over the ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    /// `\sum_j U(|x - P_j|)`.
    BumpSum,
    /// `\sum_j e^{-|x - P_j|^2 / (2σ^2)}`.
    Gaussian { sigma: f64 },
}

impl Probe {
    pub fn name(&self) -> String {
        match self {
            Probe::BumpSum => "bump_sum".into(),
            Probe::Gaussian { sigma } => format!("gaussian_sigma{sigma}"),
        }
    }

    /// Default probe set: the bump sum and Gaussians of width 1 and 2.
    pub fn default_set() -> Vec<Probe> {
        vec![
            Probe::BumpSum,
            Probe::Gaussian { sigma: 1.0 },
            Probe::Gaussian { sigma: 2.0 },
        ]
    }
}

struct ProbeField<'a> {
    probe: Probe,
    profile: &'a GroundStateProfile,
}

impl LocalField for ProbeField<'_> {
    fn value_grad(&self, y: &[f64; 3]) -> (f64, [f64; 3]) {
        let (s, _) = polar(y);
        let (v, dv) = match self.probe {
            Probe::BumpSum => self.profile.eval_with_derivative(s),
            Probe::Gaussian { sigma } => {
                let e = (-s * s / (2.0 * sigma * sigma)).exp();
                (e, -s / (sigma * sigma) * e)
            }
        };
        if s == 0.0 {
            return (v, [0.0; 3]);
        }
        (v, [dv * y[0] / s, dv * y[1] / s, dv * y[2] / s])
    }

    fn value_polar(&self, s: f64, _mu: f64) -> f64 {
        self.value_grad(&[s, 0.0, 0.0]).0
    }
}

/// Residual `I'(u)[v]` along one normalised probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResidual {
    pub probe: String,
    /// `|I'(u)[v̂]|`.
    pub value: f64,
    /// `\int V φ_u u v̂`.
    pub nonlocal_term: f64,
    /// `\int (u^p - \sum_j U_{P_j}^p) v̂`.
    pub nonlinear_term: f64,
    /// `‖v‖` before normalisation.
    pub probe_norm: f64,
}

/// Maximum of the probe residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub value: f64,
    pub probes: Vec<ProbeResidual>,
}

/// Node-wise data of `u = z_r + w` on a sector grid.
pub(crate) struct SectorFields {
    pub grid: SectorGrid,
    pub frame: RingFrame,
    /// `u` at the nodes.
    pub u: Vec<f64>,
    /// `\sum_{j near} U_{P_j}^p` at the nodes.
    pub bump_powers: Vec<f64>,
    /// `V φ_u` at the nodes.
    pub v_phi: Vec<f64>,
    /// `w` and `∇w` at the nodes, when a correction is present.
    pub w: Option<Vec<(f64, [f64; 3])>>,
}

/// Evaluates `u = z_r + w`, `V φ_u` and the bump powers at the nodes of the
/// wedge grid, with `w` given by the local field `correction` about every bump.
pub(crate) fn sector_fields(
    ansatz: &MultiBumpAnsatz<'_>,
    correction: Option<&dyn LocalField>,
    knots: &[f64],
    opts: &FieldOptions,
) -> Result<SectorFields> {
    use rayon::prelude::*;
    let config = ansatz.config;
    let profile = ansatz.profile;
    let p = profile.exponent();
    let frame = RingFrame::new(config, opts.neighbours);
    let grid = SectorGrid::wedge(&config, knots, &opts.sector, opts.spec.max_evals)?;
    let axial = AxialGrid::new(opts.axial)?;
    let pot: AxialPotential = {
        let source = bump_source(&axial, config.radius(), &ansatz.potential, |s, mu| {
            profile.eval(s) + correction.map_or(0.0, |c| c.value_polar(s, mu))
        });
        axial.potential(&source)
    };
    let data: Vec<(f64, f64, f64, Option<(f64, [f64; 3])>)> = grid
        .nodes
        .par_iter()
        .map(|node| {
            let x = &node.x;
            let mut z = 0.0;
            let mut powers = 0.0;
            for &j in frame.near() {
                let u = profile.eval(polar(&frame.local(j, x)).0);
                z += u;
                powers += u.powf(p);
            }
            let w = correction.map(|c| ring_field(&frame, c, x));
            let u = z + w.map_or(0.0, |w| w.0);
            let radius = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let v_phi = ansatz.potential.value(radius) * ring_potential(&frame, &pot, x);
            (u, powers, v_phi, w)
        })
        .collect();
    let mut u = Vec::with_capacity(data.len());
    let mut bump_powers = Vec::with_capacity(data.len());
    let mut v_phi = Vec::with_capacity(data.len());
    let mut w = correction.map(|_| Vec::with_capacity(data.len()));
    for (a, b, c, d) in data {
        u.push(a);
        bump_powers.push(b);
        v_phi.push(c);
        if let (Some(w), Some(d)) = (w.as_mut(), d) {
            w.push(d);
        }
    }
    Ok(SectorFields {
        grid,
        frame,
        u,
        bump_powers,
        v_phi,
        w,
    })
}

impl SectorFields {
    /// `I'(u)[v]` split into its nonlocal and nonlinear parts, together with
    /// `‖v‖^2`, for a ring-symmetric test field given node-wise.
    pub(crate) fn derivative_along(&self, p: f64, values: &[(f64, [f64; 3])]) -> (f64, f64, f64, f64) {
        let mut linear = 0.0;
        let mut nonlocal = 0.0;
        let mut nonlinear = 0.0;
        let mut norm = 0.0;
        for (q, node) in self.grid.nodes.iter().enumerate() {
            let (v, gv) = values[q];
            let u = self.u[q];
            if let Some(w) = &self.w {
                let (wv, gw) = w[q];
                linear += node.w * (gw[0] * gv[0] + gw[1] * gv[1] + gw[2] * gv[2] + wv * v);
            }
            nonlocal += node.w * self.v_phi[q] * u * v;
            nonlinear += node.w * (u.abs().powf(p - 1.0) * u - self.bump_powers[q]) * v;
            norm += node.w * (gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2] + v * v);
        }
        let m = self.grid.multiplicity;
        (m * linear, m * nonlocal, m * nonlinear, m * norm)
    }
}

/// `max_v |I'(z_r)[v]| / ‖v‖` over the probe set.
pub fn residual_surrogate(ansatz: &MultiBumpAnsatz<'_>, probes: &[Probe], opts: &FieldOptions) -> Result<ResidualReport> {
    residual_with_correction(ansatz, None, &[], probes, opts)
}

/// Residual surrogate at `z_r + w` for a correction given about every bump.
pub fn residual_with_correction(
    ansatz: &MultiBumpAnsatz<'_>,
    correction: Option<&dyn LocalField>,
    knots: &[f64],
    probes: &[Probe],
    opts: &FieldOptions,
) -> Result<ResidualReport> {
    let fields = sector_fields(ansatz, correction, knots, opts)?;
    Ok(probe_residuals(ansatz, &fields, probes))
}

pub(crate) fn probe_residuals(ansatz: &MultiBumpAnsatz<'_>, fields: &SectorFields, probes: &[Probe]) -> ResidualReport {
    let p = ansatz.profile.exponent();
    let mut out = Vec::with_capacity(probes.len());
    for &probe in probes {
        let field = ProbeField {
            probe,
            profile: ansatz.profile,
        };
        let values: Vec<(f64, [f64; 3])> = fields
            .grid
            .nodes
            .iter()
            .map(|n| ring_field(&fields.frame, &field, &n.x))
            .collect();
        let (linear, nonlocal, nonlinear, norm_sq) = fields.derivative_along(p, &values);
        let norm = norm_sq.sqrt();
        let total = (linear + nonlocal - nonlinear) / norm;
        out.push(ProbeResidual {
            probe: probe.name(),
            value: total.abs(),
            nonlocal_term: nonlocal / norm,
            nonlinear_term: nonlinear / norm,
            probe_norm: norm,
        });
    }
    ResidualReport {
        value: out.iter().map(|p| p.value).fold(0.0, f64::max),
        probes: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::radius_window;
    use crate::groundstate::find_ground_state;
    use crate::interactions::{default_fit_separations, fit_interaction};
    use crate::potentials::{phi_of_radial_source, PotentialVariant};
    use crate::sector::SectorGrid;
    use std::sync::OnceLock;

    fn cubic() -> &'static GroundStateProfile {
        static PROFILE: OnceLock<GroundStateProfile> = OnceLock::new();
        PROFILE.get_or_init(|| find_ground_state(3.0, 1e-12).unwrap())
    }

    fn constants() -> &'static ReducedConstants {
        static C: OnceLock<ReducedConstants> = OnceLock::new();
        C.get_or_init(|| reduced_constants(cubic(), &QuadratureSpec::default().with_rel_tol(1e-8)).unwrap())
    }

    fn shifted() -> PotentialModel {
        PotentialModel::new(PotentialVariant::Shifted, 1.0, 2.0).unwrap()
    }

    #[test]
    fn ansatz_symmetries() {
        let c = BumpConfiguration::new(5, 9.0).unwrap();
        let a = MultiBumpAnsatz::new(c, cubic(), shifted());
        let x = [3.0, 1.5, -0.7];
        let v = evaluate_ansatz(&a, &x);
        let t = 2.0 * PI / 5.0;
        let rot = [t.cos() * x[0] - t.sin() * x[1], t.sin() * x[0] + t.cos() * x[1], x[2]];
        assert!((evaluate_ansatz(&a, &rot) - v).abs() < 1e-12);
        assert!((evaluate_ansatz(&a, &[x[0], -x[1], x[2]]) - v).abs() < 1e-12);
        assert!((evaluate_ansatz(&a, &[x[0], x[1], -x[2]]) - v).abs() < 1e-12);
        assert!((evaluate_ansatz(&a, &c.position(0)) - cubic().center_value()).abs() < 1e-3);
    }

    #[test]
    fn reduced_constants_values() {
        let c = constants();
        assert!((c.c0 - 0.25 * cubic().integral_moment(4.0)).abs() < 1e-9);
        assert!((c.coulomb_self - 387.98665).abs() / 387.98665 < 1e-4);
        assert!((c.b2 - 28.4176).abs() < 1e-3);
        assert_eq!(c.b3, 0.5);
    }

    #[test]
    fn optimal_radius_lies_in_window() {
        let spec = QuadratureSpec::default();
        let fit = fit_interaction(cubic(), &default_fit_separations(), &spec).unwrap();
        let model = InteractionModel::fast(cubic(), fit, spec);
        let w = radius_window(2.0, crate::geometry::default_beta(2.0), 16).unwrap();
        let opt = find_optimal_radius(&w, constants(), 2.0, &model, 60).unwrap();
        assert!(w.contains(opt.r));
        for r in w.samples(20) {
            let f = reduced_energy(16, r, constants(), 2.0, &model).unwrap().fbar;
            assert!(f <= opt.fbar + 1e-15);
        }
    }

    #[test]
    fn single_bump_at_origin_matches_radial_route() {
        // k = 1 at the origin: every term reduces to a radial integral.
        let v = shifted();
        let config = BumpConfiguration::single(0.0).unwrap();
        let a = MultiBumpAnsatz::new(config, cubic(), v);
        let model = InteractionModel::quadrature(cubic(), QuadratureSpec::default());
        let e = energy_direct(&a, &model, &FieldOptions::default()).unwrap();
        let phi = phi_of_radial_source(cubic(), &v).unwrap();
        let radial = 4.0
            * PI
            * cubic().radial_integral(|r, u, _, _| v.value(r) * phi.eval(r) * u * u * r * r);
        assert!((e.nonlocal_diagonal - radial).abs() / radial < 1e-6, "{} vs {radial}", e.nonlocal_diagonal);
        let p = cubic().exponent();
        let expected = 0.5 * cubic().energy_norm_sq() + 0.25 * radial - cubic().integral_moment(p + 1.0) / (p + 1.0);
        assert!((e.total - expected).abs() / expected.abs() < 1e-6);
    }

    #[test]
    fn zero_potential_single_bump_has_zero_residual() {
        let a = MultiBumpAnsatz::new(BumpConfiguration::single(0.0).unwrap(), cubic(), PotentialModel::constant(0.0));
        let rep = residual_surrogate(&a, &Probe::default_set(), &FieldOptions::default()).unwrap();
        assert!(rep.value < 1e-8, "{rep:?}");
    }

    #[test]
    fn residual_terms_are_consistent_with_energy_terms() {
        let k = 8;
        let r = 2.0 / PI * 8.0 * 8f64.ln();
        let config = BumpConfiguration::new(k, r).unwrap();
        let a = MultiBumpAnsatz::new(config, cubic(), shifted());
        let spec = QuadratureSpec::default();
        let model = InteractionModel::quadrature(cubic(), spec);
        let opts = FieldOptions::default();
        let e = energy_direct(&a, &model, &opts).unwrap();
        let rep = residual_surrogate(&a, &[Probe::BumpSum], &opts).unwrap();
        let norm = rep.probes[0].probe_norm;
        let nonlocal = rep.probes[0].nonlocal_term;
        assert!((nonlocal - 4.0 * e.nonlocal / norm).abs() / nonlocal < 0.05, "{nonlocal} vs {}", 4.0 * e.nonlocal / norm);
        // ‖z‖^2 = k‖U‖^2 + k \sum I
        let z_norm_sq = 2.0 * e.kinetic_mass;
        assert!((norm * norm - z_norm_sq).abs() / z_norm_sq < 1e-4);
    }

    #[test]
    fn nonlinear_term_matches_expansion() {
        let k = 8;
        let r = 2.0 / PI * 8.0 * 8f64.ln();
        let a = MultiBumpAnsatz::new(BumpConfiguration::new(k, r).unwrap(), cubic(), shifted());
        let model = InteractionModel::quadrature(cubic(), QuadratureSpec::default());
        let e = energy_direct(&a, &model, &FieldOptions::default()).unwrap();
        let base = 8.0 / 4.0 * cubic().integral_moment(4.0);
        let cross_direct = e.nonlinear - base;
        let cross_asym = e.nonlinear_asymptotic - base;
        assert!((cross_direct - cross_asym).abs() / cross_asym < 0.05, "{cross_direct} vs {cross_asym}");
    }

    #[test]
    fn wedge_grid_positivity_of_ansatz() {
        let c = BumpConfiguration::new(8, 10.6).unwrap();
        let a = MultiBumpAnsatz::new(c, cubic(), shifted());
        let g = SectorGrid::wedge(&c, &[], &SectorResolution::default(), u64::MAX).unwrap();
        assert!(g.nodes.iter().all(|n| evaluate_ansatz(&a, &n.x) > 0.0));
    }
}
