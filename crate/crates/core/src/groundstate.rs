//! Radial ground state of `-Δu + u = u^p` in three dimensions.
//!
//! The profile is found by shooting on the radial ODE
//! `u'' + (2/r) u' - u + u^p = 0` with bisection on the centre value.
//! Beyond the radius where the two bracketing shots separate, the profile is
//! continued by variation of parameters around the decaying mode `e^{-r}/r`,
//! which removes the exponentially growing contamination of plain shooting.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Bumped whenever the integrator changes in a way that alters cached profiles.
pub const INTEGRATOR_VERSION: u32 = 1;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Relative separation of the bracketing shots at which the tail takes over.
const MATCH_SEPARATION: f64 = 1e-9;

/// Classification of a single shot.
#[derive(Debug, Clone, PartialEq)]
pub enum ShotOutcome {
    /// `u` reached zero at the given radius.
    Crossed(f64),
    /// `u'` became non-negative while `0 < u < 1` at the given radius.
    Rebounded(f64),
    /// The shot decayed below `1e-8` by `r_max` without crossing or rebounding.
    Decayed(Shot),
}

/// Samples `(u, u')` of a shot on the grid `r_i = i h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub h: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Crossed(f64),
    Rebounded(f64),
    Decayed,
    Ambiguous,
}

struct Trajectory {
    u: Vec<f64>,
    du: Vec<f64>,
    class: Class,
}

fn nonlinearity(p: f64, u: f64) -> f64 {
    u.abs().powf(p - 1.0) * u
}

fn integrate_shot(p: f64, u0: f64, h: f64, n: usize) -> Trajectory {
    let mut u = Vec::with_capacity(n + 1);
    let mut du = Vec::with_capacity(n + 1);
    u.push(u0);
    du.push(0.0);
    // Series start u = u0 + a r^2 + b r^4 avoids the coordinate singularity.
    let a = (u0 - u0.powf(p)) / 6.0;
    let b = (1.0 - p * u0.powf(p - 1.0)) * a / 20.0;
    u.push(u0 + a * h * h + b * h.powi(4));
    du.push(2.0 * a * h + 4.0 * b * h.powi(3));
    let rhs = |r: f64, y: f64, v: f64| -> (f64, f64) {
        (v, -2.0 * v / r + y - nonlinearity(p, y))
    };
    let classify = |r: f64, y: f64, v: f64, prev: f64, r_prev: f64| -> Option<Class> {
        if y <= 0.0 {
            let root = r_prev + (r - r_prev) * prev / (prev - y);
            return Some(Class::Crossed(root));
        }
        if v >= 0.0 && y < 1.0 {
            return Some(Class::Rebounded(r));
        }
        None
    };
    if let Some(c) = classify(h, u[1], du[1], u0, 0.0) {
        return Trajectory {
            u,
            du,
            class: c,
        };
    }
    for i in 1..n {
        let r = i as f64 * h;
        let (y, v) = (u[i], du[i]);
        let (k1y, k1v) = rhs(r, y, v);
        let (k2y, k2v) = rhs(r + 0.5 * h, y + 0.5 * h * k1y, v + 0.5 * h * k1v);
        let (k3y, k3v) = rhs(r + 0.5 * h, y + 0.5 * h * k2y, v + 0.5 * h * k2v);
        let (k4y, k4v) = rhs(r + h, y + h * k3y, v + h * k3v);
        let yn = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        u.push(yn);
        du.push(vn);
        if !yn.is_finite() || !vn.is_finite() {
            return Trajectory {
                u,
                du,
                class: Class::Ambiguous,
            };
        }
        if let Some(c) = classify(r + h, yn, vn, y, r) {
            return Trajectory { u, du, class: c };
        }
    }
    let last = u[n];
    let tail_start = n - n / 10;
    let decreasing = (tail_start..n).all(|i| du[i] < 0.0);
    let class = if last < 1e-8 && decreasing {
        Class::Decayed
    } else {
        Class::Ambiguous
    };
    Trajectory { u, du, class }
}

fn grid_size(h: f64, r_max: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", format!("step must be positive, got {h}")));
    }
    if !(r_max >= 20.0 && r_max.is_finite()) {
        return Err(Error::invalid("r_max", format!("must be at least 20, got {r_max}")));
    }
    let n = (r_max / h).round() as usize;
    if n < 100 {
        return Err(Error::invalid("h", "grid has fewer than 100 steps"));
    }
    Ok(n)
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p < 5.0 {
        Ok(())
    } else {
        Err(Error::invalid("p", format!("exponent must lie in (1, 5), got {p}")))
    }
}

/// Integrates the radial ODE from `u(0) = u0`, `u'(0) = 0` with fixed-step
/// RK4 and classifies the shot.
pub fn shoot(p: f64, u0: f64, h: f64, r_max: f64) -> Result<ShotOutcome> {
    check_exponent(p)?;
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::invalid("u0", format!("must be positive, got {u0}")));
    }
    let n = grid_size(h, r_max)?;
    let t = integrate_shot(p, u0, h, n);
    match t.class {
        Class::Crossed(r) => Ok(ShotOutcome::Crossed(r)),
        Class::Rebounded(r) => Ok(ShotOutcome::Rebounded(r)),
        Class::Decayed => Ok(ShotOutcome::Decayed(Shot {
            h,
            u: t.u,
            du: t.du,
        })),
        Class::Ambiguous => Err(Error::AmbiguousClassification { u0, r_max }),
    }
}

/// Grid and tolerance used by [`find_ground_state_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateSettings {
    /// Integration step and output grid spacing.
    pub h: f64,
    /// Outer radius of the tabulated profile.
    pub r_max: f64,
    /// Relative bracket width at which bisection is considered converged.
    /// Bisection then continues until the bracket is a single ulp wide.
    pub tol: f64,
}

impl Default for GroundStateSettings {
    fn default() -> Self {
        Self {
            h: 1e-3,
            r_max: 30.0,
            tol: 1e-12,
        }
    }
}

/// Tabulated ground state `U` on `r_i = i h`, `i = 0..=n`, with an analytic
/// tail `C e^{-r}/r` beyond the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateProfile {
    p: f64,
    h: f64,
    u: Vec<f64>,
    du: Vec<f64>,
    c_decay: f64,
}

/// Finds the ground state with the default grid (`h = 1e-3`, `r_max = 30`).
pub fn find_ground_state(p: f64, tol: f64) -> Result<GroundStateProfile> {
    find_ground_state_with(
        p,
        GroundStateSettings {
            tol,
            ..GroundStateSettings::default()
        },
    )
}

/// Finds the ground state by bisection on the centre value.
pub fn find_ground_state_with(p: f64, s: GroundStateSettings) -> Result<GroundStateProfile> {
    check_exponent(p)?;
    if !(s.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let n = grid_size(s.h, s.r_max)?;
    // Centre values at or below 1 never cross zero, so 1 starts the lower bracket.
    let mut lo = 1.0;
    let mut hi = 2.0;
    loop {
        match integrate_shot(p, hi, s.h, n).class {
            Class::Crossed(_) => break,
            Class::Rebounded(_) | Class::Decayed => {
                lo = hi;
                hi *= 2.0;
            }
            Class::Ambiguous => {
                return Err(Error::AmbiguousClassification {
                    u0: hi,
                    r_max: s.r_max,
                })
            }
        }
        if hi > 1e6 {
            return Err(Error::NoBracket { upper: hi });
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match integrate_shot(p, mid, s.h, n).class {
            Class::Crossed(_) => hi = mid,
            Class::Rebounded(_) | Class::Decayed => lo = mid,
            Class::Ambiguous => {
                return Err(Error::AmbiguousClassification {
                    u0: mid,
                    r_max: s.r_max,
                })
            }
        }
    }
    if (hi - lo) > s.tol * hi {
        return Err(Error::AmbiguousClassification {
            u0: lo,
            r_max: s.r_max,
        });
    }
    let low = integrate_shot(p, lo, s.h, n);
    let high = integrate_shot(p, hi, s.h, n);
    build_profile(p, s.h, n, &low, &high)
}

fn build_profile(p: f64, h: f64, n: usize, low: &Trajectory, high: &Trajectory) -> Result<GroundStateProfile> {
    let len = low.u.len().min(high.u.len());
    let mut i_match = 0;
    for i in 0..len {
        let scale = low.u[i].abs().max(f64::MIN_POSITIVE);
        if low.u[i] <= 0.0 || (low.u[i] - high.u[i]).abs() > MATCH_SEPARATION * scale {
            break;
        }
        i_match = i;
    }
    if (i_match as f64) * h < 2.0 {
        return Err(Error::AmbiguousClassification {
            u0: low.u[0],
            r_max: n as f64 * h,
        });
    }
    let mut u = vec![0.0; n + 1];
    let mut du = vec![0.0; n + 1];
    u[..=i_match].copy_from_slice(&low.u[..=i_match]);
    du[..=i_match].copy_from_slice(&low.du[..=i_match]);

    // w = r u solves w'' - w = -r u^p.  With w = A e^{-r} + B e^{r},
    // A' = r u^p e^{r} / 2 and B' = -r u^p e^{-r} / 2, B(inf) = 0.
    let r_m = i_match as f64 * h;
    let (um, dum) = (u[i_match], du[i_match]);
    let w = r_m * um;
    let dw = um + r_m * dum;
    let a_m = 0.5 * (w - dw) * r_m.exp();
    let m = n - i_match;
    let radius = |j: usize| (i_match + j) as f64 * h;
    let mut a = vec![a_m; m + 1];
    let mut b = vec![0.0; m + 1];
    let mut tail_u = vec![0.0; m + 1];
    for _ in 0..6 {
        for j in 0..=m {
            let r = radius(j);
            tail_u[j] = (a[j] * (-r).exp() + b[j] * r.exp()) / r;
        }
        let g: Vec<f64> = (0..=m).map(|j| radius(j) * nonlinearity(p, tail_u[j])).collect();
        a[0] = a_m;
        for j in 1..=m {
            let (r0, r1) = (radius(j - 1), radius(j));
            a[j] = a[j - 1] + 0.25 * h * (g[j - 1] * r0.exp() + g[j] * r1.exp());
        }
        b[m] = 0.0;
        for j in (0..m).rev() {
            let (r0, r1) = (radius(j), radius(j + 1));
            b[j] = b[j + 1] + 0.25 * h * (g[j] * (-r0).exp() + g[j + 1] * (-r1).exp());
        }
    }
    for j in 1..=m {
        let r = radius(j);
        let uj = (a[j] * (-r).exp() + b[j] * r.exp()) / r;
        let dwj = -a[j] * (-r).exp() + b[j] * r.exp();
        u[i_match + j] = uj;
        du[i_match + j] = (dwj - uj) / r;
    }
    log::debug!("ground state p = {p}: tail matched at r = {r_m}");
    Ok(GroundStateProfile {
        p,
        h,
        u,
        du,
        c_decay: a[m],
    })
}

/// Radial test field `f(r) P_l(cos θ)` with a closure returning `(f, f')`.
pub struct RadialAngular<'a> {
    pub degree: usize,
    pub radial: &'a dyn Fn(f64) -> (f64, f64),
}

/// Fields on which the quadratic form `Q` can be evaluated.
pub enum TestField<'a> {
    /// The ground state itself.
    Profile,
    /// A partial derivative `∂U/∂x_j` (independent of `j`).
    Derivative,
    /// A separable field `f(r) P_l(cos θ)`.
    RadialAngular(RadialAngular<'a>),
}

impl GroundStateProfile {
    /// Assembles a profile from samples; used by the cache reader.
    pub fn from_samples(p: f64, h: f64, u: Vec<f64>, du: Vec<f64>, c_decay: f64) -> Result<Self> {
        check_exponent(p)?;
        if u.len() != du.len() || u.len() < 101 {
            return Err(Error::invalid("samples", "need matching u and du with at least 101 nodes"));
        }
        Ok(Self {
            p,
            h,
            u,
            du,
            c_decay,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Radius of the last grid node.
    pub fn r_max(&self) -> f64 {
        (self.u.len() - 1) as f64 * self.h
    }

    /// `U(0)`.
    pub fn center_value(&self) -> f64 {
        self.u[0]
    }

    /// Tail constant `C` with `U(r) ~ C e^{-r}/r`.
    pub fn decay_constant(&self) -> f64 {
        self.c_decay
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.du
    }

    /// `U(r)` for any `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_derivative(r).0
    }

    /// `(U(r), U'(r))`, cubic Hermite on the grid and the analytic tail beyond.
    pub fn eval_with_derivative(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let n = self.u.len() - 1;
        if r >= self.r_max() {
            let e = self.c_decay * (-r).exp() / r;
            return (e, -e * (1.0 + 1.0 / r));
        }
        let x = r / self.h;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        let (y0, y1) = (self.u[i], self.u[i + 1]);
        let (d0, d1) = (self.du[i] * self.h, self.du[i + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv / self.h)
    }

    /// `U''(r)` from the ODE.
    pub fn second_derivative(&self, r: f64) -> f64 {
        let r = r.abs();
        if r < 1e-12 {
            let u0 = self.u[0];
            return (u0 - u0.powf(self.p)) / 3.0;
        }
        let (u, du) = self.eval_with_derivative(r);
        u - nonlinearity(self.p, u) - 2.0 * du / r
    }

    fn second_derivative_at_node(&self, i: usize) -> f64 {
        if i == 0 {
            let u0 = self.u[0];
            return (u0 - u0.powf(self.p)) / 3.0;
        }
        let r = i as f64 * self.h;
        self.u[i] - nonlinearity(self.p, self.u[i]) - 2.0 * self.du[i] / r
    }

    /// `\int_0^\infty f(r, U, U', U'') dr` by the trapezoid rule on every
    /// `stride`-th grid node plus Gauss-Legendre over the analytic tail.
    /// Integrands that are even in `r` make the trapezoid rule spectrally
    /// accurate at the origin.
    pub fn radial_integral_strided(&self, stride: usize, f: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
        let n = self.u.len() - 1;
        let stride = stride.max(1);
        let last = n - n % stride;
        let mut acc = 0.0;
        let mut i = 0;
        while i <= last {
            let r = i as f64 * self.h;
            let v = f(r, self.u[i], self.du[i], self.second_derivative_at_node(i));
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            acc += w * v;
            i += stride;
        }
        acc *= self.h * stride as f64;
        let r_end = last as f64 * self.h;
        acc + self.tail_integral(r_end, &f)
    }

    /// [`Self::radial_integral_strided`] with stride 1.
    pub fn radial_integral(&self, f: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
        self.radial_integral_strided(1, f)
    }

    fn tail_integral(&self, r0: f64, f: &impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
        let rule = GaussLegendre::new(16);
        let mut acc = 0.0;
        for k in 0..10 {
            let a = r0 + 4.0 * k as f64;
            let b = a + 4.0;
            acc += rule.integrate(a, b, |r| {
                let (u, du) = self.eval_with_derivative(r);
                f(r, u, du, self.second_derivative(r))
            });
        }
        acc
    }

    /// `\int_{R^3} U^q dx`.
    pub fn integral_moment(&self, q: f64) -> f64 {
        FOUR_PI * self.radial_integral(|r, u, _, _| u.powf(q) * r * r)
    }

    /// `\int_{R^3} U^q dx` on a grid coarsened by `stride`.
    pub fn integral_moment_strided(&self, q: f64, stride: usize) -> f64 {
        FOUR_PI * self.radial_integral_strided(stride, |r, u, _, _| u.powf(q) * r * r)
    }

    /// `\int |∇U|^2`.
    pub fn gradient_norm_sq(&self) -> f64 {
        FOUR_PI * self.radial_integral(|r, _, du, _| du * du * r * r)
    }

    /// `‖U‖^2 = \int |∇U|^2 + U^2`.
    pub fn energy_norm_sq(&self) -> f64 {
        self.gradient_norm_sq() + self.integral_moment(2.0)
    }

    /// `|‖U‖^2 - \int U^{p+1}| / ‖U‖^2`.
    pub fn energy_identity_residual(&self) -> f64 {
        let n = self.energy_norm_sq();
        (n - self.integral_moment(self.p + 1.0)).abs() / n
    }

    /// Relative Pohozaev defect
    /// `|½\int|∇U|^2 + 3/2 \int U^2 - 3/(p+1) \int U^{p+1}| / \int U^{p+1}`.
    pub fn pohozaev_residual(&self) -> f64 {
        let g = self.gradient_norm_sq();
        let m = self.integral_moment(2.0);
        let s = self.integral_moment(self.p + 1.0);
        (0.5 * g + 1.5 * m - 3.0 / (self.p + 1.0) * s).abs() / s
    }

    /// Maximum of `|u'' + 2u'/r - u + u^p|` over interior nodes, with `u''`
    /// from a fourth-order central difference of the stored `u'`.
    pub fn ode_residual_max(&self) -> f64 {
        let n = self.u.len() - 1;
        let h = self.h;
        let mut worst: f64 = 0.0;
        for i in 2..n - 1 {
            let r = i as f64 * h;
            let d2 = (-self.du[i + 2] + 8.0 * self.du[i + 1] - 8.0 * self.du[i - 1] + self.du[i - 2])
                / (12.0 * h);
            let res = d2 + 2.0 * self.du[i] / r - self.u[i] + nonlinearity(self.p, self.u[i]);
            worst = worst.max(res.abs());
        }
        worst
    }

    /// Samples of `r e^r U(r)` on `[r_lo, r_max]` and their maximum relative
    /// deviation from the decay constant.
    pub fn decay_plateau(&self, r_lo: f64) -> f64 {
        let n = self.u.len() - 1;
        let start = (r_lo / self.h).ceil() as usize;
        (start..=n)
            .map(|i| {
                let r = i as f64 * self.h;
                (r * r.exp() * self.u[i] / self.c_decay - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Quadratic form `Q(v) = ‖v‖^2 - p \int U^{p-1} v^2` of the linearisation.
    pub fn quadratic_form_q(&self, field: &TestField<'_>) -> f64 {
        let p = self.p;
        match field {
            TestField::Profile => {
                FOUR_PI
                    * self.radial_integral(|r, u, du, _| (du * du + u * u - p * u.powf(p + 1.0)) * r * r)
            }
            TestField::Derivative => {
                let d2_0 = self.second_derivative_at_node(0);
                FOUR_PI / 3.0
                    * self.radial_integral(|r, u, du, d2| {
                        let over_r = if r > 0.0 { du / r } else { d2_0 };
                        d2 * d2 * r * r + 2.0 * over_r * over_r * r * r + (du * du - p * u.powf(p - 1.0) * du * du) * r * r
                    })
            }
            TestField::RadialAngular(field) => {
                let l = field.degree as f64;
                let ll = l * (l + 1.0);
                FOUR_PI / (2.0 * l + 1.0)
                    * self.radial_integral(|r, u, _, _| {
                        if r == 0.0 {
                            return 0.0;
                        }
                        let (f, df) = (field.radial)(r);
                        (df * df + f * f - p * u.powf(p - 1.0) * f * f) * r * r + ll * f * f
                    })
            }
        }
    }

    /// `H^1` norm squared of a test field.
    pub fn field_norm_sq(&self, field: &TestField<'_>) -> f64 {
        match field {
            TestField::Profile => self.energy_norm_sq(),
            TestField::Derivative => {
                let d2_0 = self.second_derivative_at_node(0);
                FOUR_PI / 3.0
                    * self.radial_integral(|r, _, du, d2| {
                        let over_r = if r > 0.0 { du / r } else { d2_0 };
                        (d2 * d2 + 2.0 * over_r * over_r + du * du) * r * r
                    })
            }
            TestField::RadialAngular(field) => {
                let l = field.degree as f64;
                let ll = l * (l + 1.0);
                FOUR_PI / (2.0 * l + 1.0)
                    * self.radial_integral(|r, _, _, _| {
                        if r == 0.0 {
                            return 0.0;
                        }
                        let (f, df) = (field.radial)(r);
                        (df * df + f * f) * r * r + ll * f * f
                    })
            }
        }
    }

    /// Writes the profile in the `SPMB-U v1` text format via a temporary file
    /// and an atomic rename.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            writeln!(
                w,
                "SPMB-U v1 p={} h={} rmax={} u0={:.16e} C={:.16e}",
                self.p,
                self.h,
                self.r_max(),
                self.u[0],
                self.c_decay
            )?;
            for i in 0..self.u.len() {
                writeln!(w, "{:.16e} {:.16e} {:.16e}", i as f64 * self.h, self.u[i], self.du[i])?;
            }
            w.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reads a profile written by [`Self::write_to`].
    pub fn read_from(path: &Path) -> Result<Self> {
        let fail = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let reader = BufReader::new(fs::File::open(path)?);
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| fail("empty file".into()))??;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("SPMB-U") {
            return Err(fail("missing SPMB-U magic".into()));
        }
        match tokens.next() {
            Some("v1") => {}
            other => return Err(fail(format!("unsupported version {other:?}"))),
        }
        let mut field = |name: &str| -> Result<f64> {
            let tok = tokens.next().ok_or_else(|| fail(format!("missing {name}")))?;
            let value = tok
                .strip_prefix(name)
                .and_then(|s| s.strip_prefix('='))
                .ok_or_else(|| fail(format!("expected {name}=, found {tok}")))?;
            value.parse::<f64>().map_err(|e| fail(format!("{name}: {e}")))
        };
        let p = field("p")?;
        let h = field("h")?;
        let r_max = field("rmax")?;
        let u0 = field("u0")?;
        let c = field("C")?;
        let mut u = Vec::new();
        let mut du = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| fail(format!("row {}: {e}", k + 2)))?;
            if cols.len() != 3 {
                return Err(fail(format!("row {} has {} columns", k + 2, cols.len())));
            }
            u.push(cols[1]);
            du.push(cols[2]);
        }
        if u.first() != Some(&u0) {
            return Err(fail("centre value does not match first row".into()));
        }
        let profile = Self::from_samples(p, h, u, du, c)?;
        if (profile.r_max() - r_max).abs() > 1e-9 * r_max {
            return Err(fail("rmax does not match row count".into()));
        }
        Ok(profile)
    }
}

/// Cache file name for a profile key `(p, h, r_max, integrator version)`.
pub fn cache_file_name(p: f64, s: &GroundStateSettings) -> String {
    format!(
        "ground_state_p{}_h{}_rmax{}_iv{}.spmbu",
        p, s.h, s.r_max, INTEGRATOR_VERSION
    )
}

/// Loads the profile from `cache_dir` when present, otherwise computes and
/// stores it.  Without a cache directory the profile is always computed.
pub fn load_or_compute(p: f64, s: GroundStateSettings, cache_dir: Option<&Path>) -> Result<GroundStateProfile> {
    let Some(dir) = cache_dir else {
        return find_ground_state_with(p, s);
    };
    let path: PathBuf = dir.join(cache_file_name(p, &s));
    if path.exists() {
        match GroundStateProfile::read_from(&path) {
            Ok(profile) => return Ok(profile),
            Err(e) => log::warn!("ignoring unreadable cache {}: {e}", path.display()),
        }
    }
    let profile = find_ground_state_with(p, s)?;
    fs::create_dir_all(dir)?;
    profile.write_to(&path)?;
    Ok(profile)
}
