//! Overlap integrals between translated ground states and the ring
//! interaction sum `\sum_{i≥2} I(|P_1 - P_i|)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BumpConfiguration;
use crate::groundstate::GroundStateProfile;
use crate::quadrature::{adaptive_2d, QuadratureSpec};

/// Separations beyond which [`InteractionModel`] uses the fitted asymptotic form.
pub const FAST_THRESHOLD: f64 = 12.0;

/// Neighbour separations below this floor are rejected by the ring sums.
pub const GAP_FLOOR: f64 = 6.0;

/// `\int U^{b1}(|x|) U^{b2}(|x - d e_1|) dx` by nested adaptive quadrature in
/// cylindrical coordinates about the axis joining the two centres.
pub fn overlap_integral(
    profile: &GroundStateProfile,
    d: f64,
    b1: f64,
    b2: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::invalid("d", "separation must be non-negative"));
    }
    if !(b1 >= 1.0 && b2 >= 1.0) {
        return Err(Error::invalid("b", "exponents must be at least 1"));
    }
    let reach = 30.0;
    let mut outer = vec![-reach, -4.0, -1.0, 0.0, 1.0, 4.0];
    for z in [d - 4.0, d - 1.0, d, d + 1.0, d + 4.0, 0.5 * d, d + reach] {
        outer.push(z);
    }
    outer.retain(|z| *z >= -reach && *z <= d + reach);
    outer.sort_by(f64::total_cmp);
    outer.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let est = adaptive_2d(
        |z, rho| {
            let r1 = (z * z + rho * rho).sqrt();
            let r2 = ((z - d) * (z - d) + rho * rho).sqrt();
            2.0 * PI * rho * profile.eval(r1).powf(b1) * profile.eval(r2).powf(b2)
        },
        &outer,
        |_| vec![0.0, 1.0, 4.0, 10.0, reach],
        spec,
    )?;
    Ok(est.value)
}

/// `I(d) = \int U^p(|x|) U(|x - d e_1|) dx`.
pub fn interaction_ep(profile: &GroundStateProfile, d: f64, spec: &QuadratureSpec) -> Result<f64> {
    overlap_integral(profile, d, profile.exponent(), 1.0, spec)
}

/// Candidate prefactor `C \int U^p(|y|) e^{y_1} dy = 4π C \int U^p r sinh(r) dr`,
/// from the exact decaying tail of `U`.
pub fn analytic_interaction_prefactor(profile: &GroundStateProfile) -> f64 {
    let p = profile.exponent();
    let radial = profile.radial_integral(|r, u, _, _| u.powf(p) * r * r.sinh());
    4.0 * PI * profile.decay_constant() * radial
}

/// Fit of `I(d)` to `C* e^{-d}/d` over a range of separations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionFit {
    pub separations: Vec<f64>,
    pub values: Vec<f64>,
    /// Geometric mean of `d e^d I(d)`.
    pub prefactor: f64,
    /// Least-squares slope of `log(d I(d))` against `d`; close to `-1`.
    pub slope: f64,
    /// Largest relative deviation of `I(d)` from `C* e^{-d}/d`.
    pub residual: f64,
    /// Prefactor from the analytic tail.
    pub analytic_prefactor: f64,
}

impl InteractionFit {
    /// `C* e^{-d}/d`.
    pub fn eval(&self, d: f64) -> f64 {
        self.prefactor * (-d).exp() / d
    }
}

/// Evenly spaced separations on `[8, 14]` used by the default fit.
pub fn default_fit_separations() -> Vec<f64> {
    (0..13).map(|i| 8.0 + 0.5 * i as f64).collect()
}

/// Evaluates `I` by quadrature at `separations` and fits the exponential model.
pub fn fit_interaction(
    profile: &GroundStateProfile,
    separations: &[f64],
    spec: &QuadratureSpec,
) -> Result<InteractionFit> {
    if separations.len() < 2 {
        return Err(Error::invalid("separations", "need at least two points"));
    }
    let values = separations
        .iter()
        .map(|&d| interaction_ep(profile, d, spec))
        .collect::<Result<Vec<_>>>()?;
    let logs: Vec<f64> = separations
        .iter()
        .zip(&values)
        .map(|(&d, &v)| (d * v).ln())
        .collect();
    let slope = linear_fit(separations, &logs).0;
    let mean_log = separations
        .iter()
        .zip(&logs)
        .map(|(&d, &l)| l + d)
        .sum::<f64>()
        / separations.len() as f64;
    let prefactor = mean_log.exp();
    let residual = separations
        .iter()
        .zip(&values)
        .map(|(&d, &v)| (v / (prefactor * (-d).exp() / d) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(InteractionFit {
        separations: separations.to_vec(),
        values,
        prefactor,
        slope,
        residual,
        analytic_prefactor: analytic_interaction_prefactor(profile),
    })
}

/// Ordinary least squares `y ≈ slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// How `I(d)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionMode {
    /// Always by quadrature.
    Quadrature,
    /// Fitted form above [`FAST_THRESHOLD`], quadrature below.
    Fast,
}

/// Evaluator for `I(d)` combining quadrature and an optional fit.
#[derive(Debug, Clone)]
pub struct InteractionModel<'a> {
    pub profile: &'a GroundStateProfile,
    pub fit: Option<InteractionFit>,
    pub spec: QuadratureSpec,
    pub mode: InteractionMode,
}

impl<'a> InteractionModel<'a> {
    pub fn quadrature(profile: &'a GroundStateProfile, spec: QuadratureSpec) -> Self {
        Self {
            profile,
            fit: None,
            spec,
            mode: InteractionMode::Quadrature,
        }
    }

    pub fn fast(profile: &'a GroundStateProfile, fit: InteractionFit, spec: QuadratureSpec) -> Self {
        Self {
            profile,
            fit: Some(fit),
            spec,
            mode: InteractionMode::Fast,
        }
    }

    pub fn value(&self, d: f64) -> Result<f64> {
        if self.mode == InteractionMode::Fast && d > FAST_THRESHOLD {
            let fit = self.fit.as_ref().ok_or(Error::FitUnavailable { separation: d })?;
            return Ok(fit.eval(d));
        }
        interaction_ep(self.profile, d, &self.spec)
    }

    /// Asymptotic `C* e^{-d}/d` with the fitted prefactor, or the analytic one.
    pub fn asymptotic(&self, d: f64) -> f64 {
        let c = match &self.fit {
            Some(fit) => fit.prefactor,
            None => analytic_interaction_prefactor(self.profile),
        };
        c * (-d).exp() / d
    }
}

/// `\sum_{i=2}^k I(|P_1 - P_i|)`, using mirror symmetry of the polygon.
pub fn ring_interaction_sum(config: &BumpConfiguration, model: &InteractionModel<'_>) -> Result<f64> {
    let k = config.count();
    if k < 2 {
        return Ok(0.0);
    }
    let gap = config.min_gap();
    if gap < GAP_FLOOR {
        return Err(Error::GapTooSmall {
            gap,
            floor: GAP_FLOOR,
        });
    }
    let mut total = 0.0;
    for j in 1..=k / 2 {
        let v = model.value(config.distance_from_first(j))?;
        let mult = if 2 * j == k { 1.0 } else { 2.0 };
        total += mult * v;
    }
    Ok(total)
}

/// Fitted constants `c, c'` of the sandwich
/// `c e^{-d_1}/log k ≤ \sum_i I(d_i) ≤ c' e^{-d_1}` with `d_1 = 2 r sin(π/k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichConstants {
    pub lower: f64,
    pub upper: f64,
}

/// Evaluates the sandwich constants over a set of `(k, r)` configurations.
pub fn sandwich_constants(
    configs: &[BumpConfiguration],
    model: &InteractionModel<'_>,
) -> Result<SandwichConstants> {
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    for c in configs {
        let s = ring_interaction_sum(c, model)?;
        let scaled = s * c.min_gap().exp();
        lower = lower.min(scaled * (c.count() as f64).ln());
        upper = upper.max(scaled);
    }
    Ok(SandwichConstants { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::find_ground_state;
    use std::sync::OnceLock;

    fn cubic() -> &'static GroundStateProfile {
        static PROFILE: OnceLock<GroundStateProfile> = OnceLock::new();
        PROFILE.get_or_init(|| find_ground_state(3.0, 1e-12).unwrap())
    }

    #[test]
    fn zero_separation_is_moment() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-8);
        let u = cubic();
        let i0 = interaction_ep(u, 0.0, &spec).unwrap();
        let m = u.integral_moment(4.0);
        assert!((i0 - m).abs() / m < 1e-6);
    }

    #[test]
    fn overlap_is_symmetric_in_roles() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-8);
        let u = cubic();
        let a = overlap_integral(u, 5.0, 3.0, 1.0, &spec).unwrap();
        let b = overlap_integral(u, 5.0, 1.0, 3.0, &spec).unwrap();
        assert!((a - b).abs() / a < 1e-6);
    }

    #[test]
    fn equal_exponents_decay_with_polynomial_correction() {
        // For b1 = b2 = 1 the overlap decays like d e^{-d} rather than e^{-d}/d.
        let spec = QuadratureSpec::default().with_rel_tol(1e-8);
        let u = cubic();
        let ratio = |d: f64| overlap_integral(u, d, 1.0, 1.0, &spec).unwrap() * d.exp();
        assert!(ratio(14.0) > ratio(10.0));
    }

    #[test]
    fn plateau_and_analytic_prefactor() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-9);
        let fit = fit_interaction(cubic(), &default_fit_separations(), &spec).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.05, "slope {}", fit.slope);
        assert!(fit.residual < 1e-4);
        assert!((fit.prefactor - fit.analytic_prefactor).abs() / fit.prefactor < 0.02);
    }

    #[test]
    fn ring_sum_rejects_close_bumps() {
        let model = InteractionModel::quadrature(cubic(), QuadratureSpec::default());
        let c = BumpConfiguration::new(8, 5.0).unwrap();
        assert!(matches!(ring_interaction_sum(&c, &model), Err(Error::GapTooSmall { .. })));
    }

    #[test]
    fn fast_mode_needs_fit() {
        let mut model = InteractionModel::quadrature(cubic(), QuadratureSpec::default());
        model.mode = InteractionMode::Fast;
        assert!(matches!(model.value(20.0), Err(Error::FitUnavailable { .. })));
    }

    #[test]
    fn fast_and_quadrature_ring_sums_agree() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-8);
        let fit = fit_interaction(cubic(), &default_fit_separations(), &spec).unwrap();
        let c = BumpConfiguration::new(12, 18.98).unwrap();
        let slow = ring_interaction_sum(&c, &InteractionModel::quadrature(cubic(), spec)).unwrap();
        let fast = ring_interaction_sum(&c, &InteractionModel::fast(cubic(), fit, spec)).unwrap();
        assert!((slow - fast).abs() / slow < 1e-5);
    }
}
