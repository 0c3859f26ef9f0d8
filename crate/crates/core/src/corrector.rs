//! Galerkin corrector: the constrained space `W`, the projected
//! linearisation `L`, the spectral split and the contraction fixed point.
//!
//! Corrections are expanded in a bump-centred basis `b_n(s, μ)` about `P_1`
//! (axisymmetric about the radial axis, hence even in `y_2`, `y_3`) and
//! symmetrised as `B_n(x) = \sum_j b_n(R_j^{-1} x - P_1)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{probe_residuals, sector_fields, FieldOptions, MultiBumpAnsatz, Probe, ResidualReport, SectorFields};
use crate::error::{Error, Result};
use crate::fields::{polar, ring_field, LocalField, RingFrame};
use crate::geometry::BumpConfiguration;
use crate::groundstate::GroundStateProfile;
use crate::multipole::AxialGrid;
use crate::quadrature::legendre_with_derivative;
use crate::sector::{SectorGrid, SectorResolution};

/// Largest admissible Gram condition number.
pub const MAX_GRAM_CONDITION: f64 = 1e10;

/// Size and support of the bump-centred basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSpec {
    /// Cubic splines per angular degree.
    pub radial: usize,
    /// Highest Legendre degree about the radial axis.
    pub max_degree: usize,
    /// Include `U(s)`.
    pub include_profile: bool,
    /// Include `U'(s) μ`, the radial translation mode.
    pub include_derivative: bool,
    /// Spline support as a fraction of the sector half-gap.
    pub support_fraction: f64,
    /// Upper bound on the spline support radius.
    pub max_support: f64,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            radial: 6,
            max_degree: 2,
            include_profile: true,
            include_derivative: true,
            support_fraction: 0.95,
            max_support: 6.0,
        }
    }
}

impl BasisSpec {
    /// Same spec with twice the radial splines.
    pub fn refined(&self) -> Self {
        Self {
            radial: 2 * self.radial,
            ..*self
        }
    }

    pub fn size(&self) -> usize {
        self.include_profile as usize + self.include_derivative as usize + self.radial * (self.max_degree + 1)
    }
}

/// One local basis function about `P_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFunction {
    /// `U(s)`.
    Profile,
    /// `U'(s) μ = ∂_{y_1} U`.
    Derivative,
    /// `s^l [B_3((s - c)/Δ) + B_3((s + c)/Δ)] P_l(μ)`, the mirror term only for `c > 0`.
    Spline { degree: usize, centre: f64, width: f64 },
}

fn cubic_bspline(x: f64) -> (f64, f64) {
    let a = x.abs();
    if a < 1.0 {
        (2.0 / 3.0 - x * x + 0.5 * a * a * a, -2.0 * x + 1.5 * x * a)
    } else if a < 2.0 {
        let t = 2.0 - a;
        (t * t * t / 6.0, -x.signum() * 0.5 * t * t)
    } else {
        (0.0, 0.0)
    }
}

/// Even extension in `s` of the spline centred at `c`, with its `s`-derivative.
fn even_bspline(s: f64, centre: f64, width: f64) -> (f64, f64) {
    let (b, db) = cubic_bspline((s - centre) / width);
    if centre == 0.0 {
        return (b, db / width);
    }
    let (m, dm) = cubic_bspline((s + centre) / width);
    (b + m, (db + dm) / width)
}

impl BasisFunction {
    /// Value, `∂_s` and `∂_μ` at `(s, μ)`.
    fn polar_parts(&self, profile: &GroundStateProfile, s: f64, mu: f64) -> (f64, f64, f64) {
        match *self {
            BasisFunction::Profile => {
                let (u, du) = profile.eval_with_derivative(s);
                (u, du, 0.0)
            }
            BasisFunction::Derivative => {
                let (_, du) = profile.eval_with_derivative(s);
                let d2 = profile.second_derivative(s);
                (du * mu, d2 * mu, du)
            }
            BasisFunction::Spline { degree, centre, width } => {
                let (b, db) = even_bspline(s, centre, width);
                if b == 0.0 && db == 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let (pl, dpl) = legendre_with_derivative(degree, mu);
                let sl = s.powi(degree as i32);
                let dsl = if degree == 0 { 0.0 } else { degree as f64 * s.powi(degree as i32 - 1) };
                let g = sl * b;
                let dg = dsl * b + sl * db;
                (g * pl, dg * pl, g * dpl)
            }
        }
    }

    fn value_grad(&self, profile: &GroundStateProfile, y: &[f64; 3]) -> (f64, [f64; 3]) {
        let (s, mu) = polar(y);
        let (v, fs, fmu) = self.polar_parts(profile, s, mu);
        if s == 0.0 {
            return (v, [0.0; 3]);
        }
        let hat = [y[0] / s, y[1] / s, y[2] / s];
        let grad = [
            fs * hat[0] + fmu * (1.0 - mu * hat[0]) / s,
            fs * hat[1] - fmu * mu * hat[1] / s,
            fs * hat[2] - fmu * mu * hat[2] / s,
        ];
        (v, grad)
    }
}

/// A single basis function viewed as a local field.
struct Element<'a> {
    f: BasisFunction,
    profile: &'a GroundStateProfile,
}

impl LocalField for Element<'_> {
    fn value_grad(&self, y: &[f64; 3]) -> (f64, [f64; 3]) {
        self.f.value_grad(self.profile, y)
    }

    fn value_polar(&self, s: f64, mu: f64) -> f64 {
        self.f.polar_parts(self.profile, s, mu).0
    }
}

/// `\sum_n c_n b_n` as a local field.
pub struct Combination<'a> {
    basis: &'a SymmetricBasis<'a>,
    coefficients: Vec<f64>,
}

impl LocalField for Combination<'_> {
    fn value_grad(&self, y: &[f64; 3]) -> (f64, [f64; 3]) {
        let (s, _) = polar(y);
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (f, &c) in self.basis.functions.iter().zip(&self.coefficients) {
            if c == 0.0 {
                continue;
            }
            if let BasisFunction::Spline { centre, width, .. } = f {
                if (s - centre).abs() >= 2.0 * width {
                    continue;
                }
            }
            let (fv, fg) = f.value_grad(self.basis.profile, y);
            v += c * fv;
            for a in 0..3 {
                g[a] += c * fg[a];
            }
        }
        (v, g)
    }

    fn value_polar(&self, s: f64, mu: f64) -> f64 {
        self.basis
            .functions
            .iter()
            .zip(&self.coefficients)
            .map(|(f, &c)| if c == 0.0 { 0.0 } else { c * f.polar_parts(self.basis.profile, s, mu).0 })
            .sum()
    }
}

/// Symmetrised bump-centred basis of the symmetry class.
#[derive(Debug, Clone)]
pub struct SymmetricBasis<'a> {
    config: BumpConfiguration,
    profile: &'a GroundStateProfile,
    functions: Vec<BasisFunction>,
    support: f64,
    knots: Vec<f64>,
    spec: BasisSpec,
}

pub fn build_symmetric_basis<'a>(
    config: BumpConfiguration,
    profile: &'a GroundStateProfile,
    spec: &BasisSpec,
) -> Result<SymmetricBasis<'a>> {
    if spec.size() == 0 {
        return Err(Error::invalid("basis", "the basis must contain at least one function"));
    }
    if !(spec.support_fraction > 0.0 && spec.support_fraction <= 1.0) {
        return Err(Error::invalid("support_fraction", "must lie in (0, 1]"));
    }
    if spec.max_degree > 32 {
        return Err(Error::invalid("max_degree", "must be at most 32"));
    }
    let support = (spec.support_fraction * config.sector_half_gap()).min(spec.max_support);
    let mut functions = Vec::with_capacity(spec.size());
    if spec.include_profile {
        functions.push(BasisFunction::Profile);
    }
    if spec.include_derivative {
        functions.push(BasisFunction::Derivative);
    }
    let width = support / (spec.radial + 1) as f64;
    for degree in 0..=spec.max_degree {
        for i in 0..spec.radial {
            functions.push(BasisFunction::Spline {
                degree,
                centre: i as f64 * width,
                width,
            });
        }
    }
    let knots = if spec.radial > 0 {
        (1..=spec.radial + 1).map(|i| i as f64 * width).collect()
    } else {
        Vec::new()
    };
    Ok(SymmetricBasis {
        config,
        profile,
        functions,
        support,
        knots,
        spec: *spec,
    })
}

/// Node-wise values and gradients of every symmetrised basis function.
pub(crate) struct BasisSamples {
    pub values: Vec<Vec<(f64, [f64; 3])>>,
}

impl<'a> SymmetricBasis<'a> {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    pub fn config(&self) -> &BumpConfiguration {
        &self.config
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    /// Radius of the spline supports.
    pub fn support(&self) -> f64 {
        self.support
    }

    /// Spline breakpoints, used as radial quadrature breaks.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Index of `U` in the basis.
    pub fn profile_index(&self) -> Option<usize> {
        self.functions.iter().position(|f| *f == BasisFunction::Profile)
    }

    /// `B_n(x)` summed over all `k` bumps.
    pub fn eval(&self, n: usize, x: &[f64; 3]) -> f64 {
        let frame = RingFrame::new(self.config, 0);
        (0..self.config.count())
            .map(|j| self.functions[n].value_grad(self.profile, &frame.local(j, x)).0)
            .sum()
    }

    /// Local field `\sum_n c_n b_n`.
    pub fn combination(&'a self, coefficients: &[f64]) -> Combination<'a> {
        Combination {
            basis: self,
            coefficients: coefficients.to_vec(),
        }
    }

    /// Largest deviation of `B_n` from its rotated and reflected copies at
    /// `samples` random points, relative to the largest sampled value.
    pub fn symmetry_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.config.radius();
        let t = 2.0 * std::f64::consts::PI / self.config.count() as f64;
        let (st, ct) = t.sin_cos();
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for _ in 0..samples {
            let x = [
                rng.gen_range(-(r + 4.0)..r + 4.0),
                rng.gen_range(-(r + 4.0)..r + 4.0),
                rng.gen_range(-4.0..4.0),
            ];
            let images = [
                [ct * x[0] - st * x[1], st * x[0] + ct * x[1], x[2]],
                [x[0], -x[1], x[2]],
                [x[0], x[1], -x[2]],
            ];
            for n in 0..self.len() {
                let v = self.eval(n, &x);
                scale = scale.max(v.abs());
                for y in &images {
                    defect = defect.max((self.eval(n, y) - v).abs());
                }
            }
        }
        if scale > 0.0 {
            defect / scale
        } else {
            defect
        }
    }

    pub(crate) fn sample(&self, grid: &SectorGrid, frame: &RingFrame) -> BasisSamples {
        let values = self
            .functions
            .par_iter()
            .map(|&f| {
                let e = Element { f, profile: self.profile };
                grid.nodes.iter().map(|n| ring_field(frame, &e, &n.x)).collect()
            })
            .collect();
        BasisSamples { values }
    }

    /// Gram matrix of the symmetrised basis in the `H^1` inner product.
    pub fn gram(&self, opts: &FieldOptions) -> Result<DMatrix<f64>> {
        let frame = RingFrame::new(self.config, opts.neighbours);
        let grid = SectorGrid::wedge(&self.config, &self.knots, &opts.sector, opts.spec.max_evals)?;
        let samples = self.sample(&grid, &frame);
        Ok(gram_matrix(&grid, &samples))
    }

    /// `‖t - Π t‖ / ‖t‖` for the `H^1` projection `Π` of the symmetrised local
    /// field `t` onto the span of the basis.
    pub fn projection_defect(&self, target: &dyn LocalField, opts: &FieldOptions) -> Result<f64> {
        let frame = RingFrame::new(self.config, opts.neighbours);
        let grid = SectorGrid::wedge(&self.config, &self.knots, &opts.sector, opts.spec.max_evals)?;
        let samples = self.sample(&grid, &frame);
        let g = gram_matrix(&grid, &samples);
        let t: Vec<(f64, [f64; 3])> = grid.nodes.iter().map(|n| ring_field(&frame, target, &n.x)).collect();
        let b = DVector::from_iterator(self.len(), samples.values.iter().map(|bn| h1_pairing(&grid, bn, &t)));
        let tt = h1_pairing(&grid, &t, &t);
        let c = g
            .clone()
            .cholesky()
            .ok_or(Error::DegenerateBasis { condition: f64::INFINITY })?
            .solve(&b);
        Ok(((tt - b.dot(&c)).max(0.0) / tt).sqrt())
    }
}

fn h1_pairing(grid: &SectorGrid, a: &[(f64, [f64; 3])], b: &[(f64, [f64; 3])]) -> f64 {
    grid.multiplicity
        * grid
            .nodes
            .iter()
            .zip(a.iter().zip(b))
            .map(|(n, ((va, ga), (vb, gb)))| n.w * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2] + va * vb))
            .sum::<f64>()
}

fn gram_matrix(grid: &SectorGrid, samples: &BasisSamples) -> DMatrix<f64> {
    weighted_matrix(grid, samples, |_| 1.0, |_| 1.0)
}

/// `\int α ∇B_m·∇B_n + β B_m B_n` with node-wise weights `α`, `β`.
fn weighted_matrix(
    grid: &SectorGrid,
    samples: &BasisSamples,
    alpha: impl Fn(usize) -> f64 + Sync,
    beta: impl Fn(usize) -> f64 + Sync,
) -> DMatrix<f64> {
    let n = samples.values.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&samples.values[i], &samples.values[j]);
            grid.multiplicity
                * grid
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(q, node)| {
                        let ((va, ga), (vb, gb)) = (a[q], b[q]);
                        node.w * (alpha(q) * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]) + beta(q) * va * vb)
                    })
                    .sum::<f64>()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&entries) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

/// Settings of the corrector pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectorOptions {
    pub fields: FieldOptions,
    pub basis: BasisSpec,
    /// Stop when the Gram-norm change of the coefficients drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the two nonlocal terms of `I''(z_r)` in `L`.
    pub include_nonlocal_hessian: bool,
    /// Relaxation factor engaged after the first contraction failure.
    pub relaxation: f64,
}

impl Default for CorrectorOptions {
    fn default() -> Self {
        Self {
            fields: FieldOptions::default(),
            basis: BasisSpec::default(),
            tol: 1e-10,
            max_iter: 60,
            include_nonlocal_hessian: true,
            relaxation: 0.5,
        }
    }
}

/// Galerkin matrices of the linearised problem at `z_r`.
#[derive(Debug, Clone)]
pub struct ProjectedSystem {
    /// `⟨B_m, B_n⟩`.
    pub gram: DMatrix<f64>,
    /// `I''(z_r)[B_m, B_n]`.
    pub hessian: DMatrix<f64>,
    /// `2 \int\int V z B_m (x) V z B_n (y) / |x - y|`.
    pub nonlocal_hat: DMatrix<f64>,
    /// `\int V φ_{z_r} B_m B_n`.
    pub nonlocal_local: DMatrix<f64>,
    /// `I'(z_r)[B_n]`.
    pub load: DVector<f64>,
    /// `\int U_{P_1}^{p-1} Z_{1,1} B_n`.
    pub constraint: DVector<f64>,
    /// Largest `|\int U_{P_1}^{p-1} Z_{1,j} B_n|`, `j = 2, 3`, relative to the `j = 1` row.
    pub aux_constraint_ratio: f64,
    /// Largest absolute entry of the `j = 2, 3` rows.
    pub aux_constraint_max: f64,
    /// Relative asymmetry of the assembled Hessian before symmetrisation.
    pub symmetry_defect: f64,
    pub gram_condition: f64,
    /// Index of `U` in the basis.
    pub profile_index: Option<usize>,
    /// Number of quadrature nodes in the wedge.
    pub nodes: usize,
}

pub fn assemble_projected_system(
    basis: &SymmetricBasis<'_>,
    ansatz: &MultiBumpAnsatz<'_>,
    opts: &CorrectorOptions,
) -> Result<ProjectedSystem> {
    let p = ansatz.profile.exponent();
    let profile = ansatz.profile;
    let config = ansatz.config;
    let fields = sector_fields(ansatz, None, &basis.knots, &opts.fields)?;
    let samples = basis.sample(&fields.grid, &fields.frame);
    let n = basis.len();

    let gram = gram_matrix(&fields.grid, &samples);
    let eig = gram.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    let gram_condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if gram_condition > MAX_GRAM_CONDITION {
        return Err(Error::DegenerateBasis {
            condition: gram_condition,
        });
    }

    let z_pow: Vec<f64> = fields.u.iter().map(|z| p * z.abs().powf(p - 1.0)).collect();
    let local = weighted_matrix(&fields.grid, &samples, |_| 1.0, |q| 1.0 - z_pow[q]);
    let nonlocal_local = weighted_matrix(&fields.grid, &samples, |_| 0.0, |q| fields.v_phi[q]);

    let axial = AxialGrid::new(opts.fields.axial)?;
    let r = config.radius();
    let sources: Vec<_> = basis
        .functions
        .iter()
        .map(|&f| bump_source_product(&axial, r, ansatz, f))
        .collect();
    let potentials: Vec<_> = sources.par_iter().map(|s| axial.potential(s)).collect();
    let charges: Vec<f64> = sources.iter().map(|s| axial.charge(s)).collect();
    let k = config.count();
    let inverse_sum: f64 = (1..k).map(|j| 1.0 / config.distance_from_first(j)).sum();
    let mut nonlocal_hat = DMatrix::zeros(n, n);
    let mut asym: f64 = 0.0;
    let mut hat_scale: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = axial.pairing(&sources[i], &potentials[j]);
            nonlocal_hat[(i, j)] = 2.0 * k as f64 * (d + charges[i] * charges[j] * inverse_sum);
        }
    }
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((nonlocal_hat[(i, j)] - nonlocal_hat[(j, i)]).abs());
            hat_scale = hat_scale.max(nonlocal_hat[(i, j)].abs());
        }
    }
    let nonlocal_hat = (&nonlocal_hat + nonlocal_hat.transpose()) * 0.5;

    let mut hessian = local.clone();
    if opts.include_nonlocal_hessian {
        hessian += &nonlocal_local;
        hessian += &nonlocal_hat;
    }
    let scale = hessian.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let symmetry_defect = asym / scale.max(f64::MIN_POSITIVE);

    let load = DVector::from_iterator(
        n,
        samples.values.iter().map(|b| {
            let (_, nonlocal, nonlinear, _) = fields.derivative_along(p, b);
            nonlocal - nonlinear
        }),
    );

    let rows = constraint_rows(basis, profile, &fields.frame, &opts.fields.sector, opts.fields.spec.max_evals)?;
    let row1 = rows[0].iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let aux_constraint_max = rows[1..].iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    Ok(ProjectedSystem {
        gram,
        hessian,
        nonlocal_hat,
        nonlocal_local,
        load,
        constraint: DVector::from_vec(rows[0].clone()),
        aux_constraint_ratio: aux_constraint_max / row1.max(f64::MIN_POSITIVE),
        aux_constraint_max,
        symmetry_defect,
        gram_condition,
        profile_index: basis.profile_index(),
        nodes: fields.grid.len(),
    })
}

fn bump_source_product(
    axial: &AxialGrid,
    r: f64,
    ansatz: &MultiBumpAnsatz<'_>,
    f: BasisFunction,
) -> crate::multipole::AxialSource {
    let profile = ansatz.profile;
    let v = ansatz.potential;
    axial.source(|s, mu| {
        let x = (r * r + s * s + 2.0 * r * s * mu).max(0.0).sqrt();
        v.value(x) * profile.eval(s) * f.polar_parts(profile, s, mu).0
    })
}

/// Rows `\int U_{P_1}^{p-1} Z_{1,j} B_n`, `j = 1, 2, 3`, by quadrature over a
/// ball about `P_1`.
fn constraint_rows(
    basis: &SymmetricBasis<'_>,
    profile: &GroundStateProfile,
    frame: &RingFrame,
    res: &SectorResolution,
    max_nodes: u64,
) -> Result<[Vec<f64>; 3]> {
    let p = profile.exponent();
    let res = SectorResolution {
        reach: res.reach.min(12.0),
        ..*res
    };
    let centre = basis.config.position(0);
    let grid = SectorGrid::ball(centre, &basis.knots, &res, max_nodes)?;
    let weights: Vec<[f64; 3]> = grid
        .nodes
        .iter()
        .map(|node| {
            let y = frame.local(0, &node.x);
            let (s, _) = polar(&y);
            let (u, du) = profile.eval_with_derivative(s);
            let c = node.w * u.abs().powf(p - 1.0) * du / s;
            [c * y[0], c * y[1], c * y[2]]
        })
        .collect();
    let samples = basis.sample(&grid, frame);
    let mut rows = [vec![0.0; basis.len()], vec![0.0; basis.len()], vec![0.0; basis.len()]];
    for (n, bn) in samples.values.iter().enumerate() {
        for (w, (v, _)) in weights.iter().zip(bn) {
            for j in 0..3 {
                rows[j][n] += w[j] * v;
            }
        }
    }
    Ok(rows)
}

/// Columns spanning the Euclidean orthogonal complement of `v`.
fn complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let norm = v.norm();
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    let mut u = v / norm;
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let u = &u / u.norm();
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * 2.0;
    h.columns(1, n - 1).into_owned()
}

/// Eigenvalues of `A x = λ B x` for symmetric `A` and positive definite `B`, ascending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateBasis { condition: f64::INFINITY })?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(a)
        .ok_or(Error::DegenerateBasis { condition: f64::INFINITY })?;
    let m = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::DegenerateBasis { condition: f64::INFINITY })?;
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Signs and sizes of `L` on the bump direction and on its complement in `W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    /// Rayleigh quotient of `L` along the `W`-projection of `\sum_i U_{P_i}`.
    pub bump_rayleigh: f64,
    /// Generalised eigenvalues on the `G`-orthogonal complement of that direction in `W`.
    pub complement_eigenvalues: Vec<f64>,
    /// Generalised eigenvalues of `L` on `W`.
    pub projected_eigenvalues: Vec<f64>,
    /// `-bump_rayleigh`.
    pub c1_hat: f64,
    /// Smallest complement eigenvalue.
    pub c2_hat: f64,
    /// `1 / min |λ|` over the eigenvalues of `L` on `W`.
    pub inverse_bound: f64,
    pub holds: bool,
}

impl SpectralReport {
    /// `Err(SplitViolated)` unless the split holds.
    pub fn require(&self) -> Result<()> {
        if self.holds {
            Ok(())
        } else {
            Err(Error::SplitViolated {
                reason: format!(
                    "bump Rayleigh quotient {:.6e}, smallest complement eigenvalue {:.6e}",
                    self.bump_rayleigh, self.c2_hat
                ),
            })
        }
    }
}

/// `W`-coordinates: `c = Q y` with `g · Q y = 0`.
struct Constrained {
    q: DMatrix<f64>,
    gram: DMatrix<f64>,
    hessian: DMatrix<f64>,
}

impl Constrained {
    fn new(system: &ProjectedSystem) -> Self {
        let q = complement(&system.constraint);
        let gram = q.transpose() * &system.gram * &q;
        let hessian = q.transpose() * &system.hessian * &q;
        Self {
            gram: (&gram + gram.transpose()) * 0.5,
            hessian: (&hessian + hessian.transpose()) * 0.5,
            q,
        }
    }
}

pub fn spectral_split_check(system: &ProjectedSystem) -> Result<SpectralReport> {
    let idx = system
        .profile_index
        .ok_or_else(|| Error::invalid("basis", "the spectral split needs U in the basis"))?;
    let n = system.gram.nrows();
    let w = Constrained::new(system);
    let projected = generalized_eigenvalues(&w.hessian, &w.gram)?;

    let g = &system.constraint;
    let chol = system
        .gram
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateBasis { condition: f64::INFINITY })?;
    let ginv_g = chol.solve(g);
    let mut a = DVector::zeros(n);
    a[idx] = 1.0;
    let denom = g.dot(&ginv_g);
    if denom > 0.0 {
        a -= &ginv_g * (g[idx] / denom);
    }
    let bump_rayleigh = a.dot(&(&system.hessian * &a)) / a.dot(&(&system.gram * &a));

    let a_w = w.q.transpose() * &a;
    let b = complement(&(&w.gram * &a_w));
    let lb = b.transpose() * &w.hessian * &b;
    let gb = b.transpose() * &w.gram * &b;
    let complement_eigenvalues = generalized_eigenvalues(&lb, &gb)?;
    let c2_hat = complement_eigenvalues.first().copied().unwrap_or(f64::INFINITY);
    let min_abs = projected.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    Ok(SpectralReport {
        bump_rayleigh,
        complement_eigenvalues,
        projected_eigenvalues: projected,
        c1_hat: -bump_rayleigh,
        c2_hat,
        inverse_bound: 1.0 / min_abs,
        holds: bump_rayleigh < 0.0 && c2_hat > 0.0,
    })
}

/// One step of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖w_{n+1} - w_n‖`.
    pub change: f64,
    /// `change / previous change`.
    pub ratio: f64,
    /// `|g · c| / ‖w‖`.
    pub constraint_defect: f64,
    pub relaxation: f64,
}

/// Converged corrector and its iteration history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub coefficients: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    /// `‖w‖`.
    pub w_norm: f64,
    /// `‖z_r‖`.
    pub z_norm: f64,
    /// `‖w_1‖`.
    pub first_iterate_norm: f64,
    /// `C̄ ‖l_k‖_*`.
    pub first_iterate_bound: f64,
    /// Largest observed contraction ratio after the first step.
    pub max_ratio: f64,
    /// `min (z_r + w)` over the wedge nodes.
    pub min_corrected: f64,
    /// `min z_r` over the wedge nodes.
    pub min_ansatz: f64,
    /// `|g · c| / ‖w‖` at the final iterate.
    pub constraint_defect: f64,
}

/// `I'(z_r + w)[B_n]` for every basis function, with the node data of `z_r + w`.
fn derivative_vector(
    basis: &SymmetricBasis<'_>,
    ansatz: &MultiBumpAnsatz<'_>,
    coefficients: &[f64],
    samples: &BasisSamples,
    opts: &FieldOptions,
) -> Result<(DVector<f64>, SectorFields)> {
    let p = ansatz.profile.exponent();
    let comb = basis.combination(coefficients);
    let fields = sector_fields(ansatz, Some(&comb), &basis.knots, opts)?;
    let d = DVector::from_iterator(
        basis.len(),
        samples.values.iter().map(|b| {
            let (linear, nonlocal, nonlinear, _) = fields.derivative_along(p, b);
            linear + nonlocal - nonlinear
        }),
    );
    Ok((d, fields))
}

/// Iterates `w ← -L^{-1}(l_k + R'(w))` on `W` from `w = 0`.
pub fn solve_fixed_point(
    system: &ProjectedSystem,
    basis: &SymmetricBasis<'_>,
    ansatz: &MultiBumpAnsatz<'_>,
    opts: &CorrectorOptions,
) -> Result<FixedPoint> {
    spectral_split_check(system)?.require()?;
    let n = basis.len();
    let w = Constrained::new(system);
    let lu = w.hessian.clone().lu();
    let gram_w_chol = w
        .gram
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateBasis { condition: f64::INFINITY })?;
    let inverse_bound = spectral_split_check(system)?.inverse_bound;

    let frame = RingFrame::new(ansatz.config, opts.fields.neighbours);
    let grid = SectorGrid::wedge(&ansatz.config, &basis.knots, &opts.fields.sector, opts.fields.spec.max_evals)?;
    let samples = basis.sample(&grid, &frame);
    let g_norm = |c: &DVector<f64>| c.dot(&(&system.gram * c)).max(0.0).sqrt();
    let z_norm = match system.profile_index {
        Some(i) => system.gram[(i, i)].sqrt(),
        None => f64::NAN,
    };

    let load_w = w.q.transpose() * &system.load;
    let load_dual = load_w.dot(&gram_w_chol.solve(&load_w)).max(0.0).sqrt();

    let mut c = DVector::<f64>::zeros(n);
    let mut derivative = system.load.clone();
    let mut history = Vec::new();
    let mut prev_change = f64::NAN;
    let mut omega = 1.0;
    let mut above = 0usize;
    let mut relaxed = false;
    let mut first_iterate_norm = f64::NAN;
    let mut converged = false;
    let mut max_ratio: f64 = 0.0;
    let mut last_fields: Option<SectorFields> = None;
    for it in 1..=opts.max_iter {
        let rhs = w.q.transpose() * (&derivative - &system.hessian * &c);
        let target = lu
            .solve(&(-rhs))
            .ok_or(Error::DegenerateBasis { condition: f64::INFINITY })?;
        let y = w.q.transpose() * &c;
        let y_new = &y * (1.0 - omega) + target * omega;
        let c_new = &w.q * y_new;
        let change = g_norm(&(&c_new - &c));
        let ratio = change / prev_change;
        if it == 1 {
            first_iterate_norm = g_norm(&c_new);
        }
        c = c_new;
        let w_norm = g_norm(&c);
        let constraint_defect = if w_norm > 0.0 {
            system.constraint.dot(&c).abs() / w_norm
        } else {
            0.0
        };
        history.push(IterationRecord {
            iteration: it,
            change,
            ratio,
            constraint_defect,
            relaxation: omega,
        });
        log::debug!("fixed point iteration {it}: change {change:.3e}, ratio {ratio:.3e}");
        if it > 1 {
            max_ratio = max_ratio.max(ratio);
        }
        if change <= opts.tol {
            converged = true;
            break;
        }
        if ratio > 1.0 {
            above += 1;
        } else {
            above = 0;
        }
        if above >= 3 {
            if relaxed {
                return Err(Error::NotContracting { iterations: it, ratio });
            }
            log::warn!("fixed point not contracting after {it} iterations, relaxing by {}", opts.relaxation);
            relaxed = true;
            omega = opts.relaxation;
            above = 0;
        }
        prev_change = change;
        let (d, fields) = derivative_vector(basis, ansatz, c.as_slice(), &samples, &opts.fields)?;
        derivative = d;
        last_fields = Some(fields);
    }
    let fields = match last_fields {
        Some(f) => f,
        None => derivative_vector(basis, ansatz, c.as_slice(), &samples, &opts.fields)?.1,
    };
    let min_corrected = fields.u.iter().copied().fold(f64::INFINITY, f64::min);
    let min_ansatz = fields
        .grid
        .nodes
        .iter()
        .map(|node| {
            fields
                .frame
                .near()
                .iter()
                .map(|&j| ansatz.profile.eval(polar(&fields.frame.local(j, &node.x)).0))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let w_norm = g_norm(&c);
    Ok(FixedPoint {
        coefficients: c.iter().copied().collect(),
        converged,
        w_norm,
        z_norm,
        first_iterate_norm,
        first_iterate_bound: inverse_bound * load_dual,
        max_ratio,
        min_corrected,
        min_ansatz,
        constraint_defect: history.last().map_or(0.0, |h| h.constraint_defect),
        history,
    })
}

/// Full corrector run at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionReport {
    pub k: usize,
    pub r: f64,
    pub basis_size: usize,
    pub gram_condition: f64,
    pub hessian_symmetry_defect: f64,
    pub aux_constraint_ratio: f64,
    pub spectral: SpectralReport,
    pub fixed_point: FixedPoint,
    pub residual_before: ResidualReport,
    pub residual_after: ResidualReport,
}

/// Builds the basis, assembles, checks the split, solves and compares residuals.
pub fn correct(ansatz: &MultiBumpAnsatz<'_>, probes: &[Probe], opts: &CorrectorOptions) -> Result<CorrectionReport> {
    let basis = build_symmetric_basis(ansatz.config, ansatz.profile, &opts.basis)?;
    let system = assemble_projected_system(&basis, ansatz, opts)?;
    let spectral = spectral_split_check(&system)?;
    let fixed_point = solve_fixed_point(&system, &basis, ansatz, opts)?;
    let before = sector_fields(ansatz, None, &basis.knots, &opts.fields)?;
    let residual_before = probe_residuals(ansatz, &before, probes);
    let comb = basis.combination(&fixed_point.coefficients);
    let after = sector_fields(ansatz, Some(&comb), &basis.knots, &opts.fields)?;
    let residual_after = probe_residuals(ansatz, &after, probes);
    Ok(CorrectionReport {
        k: ansatz.config.count(),
        r: ansatz.config.radius(),
        basis_size: basis.len(),
        gram_condition: system.gram_condition,
        hessian_symmetry_defect: system.symmetry_defect,
        aux_constraint_ratio: system.aux_constraint_ratio,
        spectral,
        fixed_point,
        residual_before,
        residual_after,
    })
}
