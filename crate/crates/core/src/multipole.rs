//! Newton potentials of axisymmetric sources by Legendre expansion.
//!
//! A source `ρ(s, μ)` given in spherical coordinates about a centre, with `μ`
//! the cosine of the angle to the symmetry axis, is expanded as
//! `ρ = \sum_l ρ_l(s) P_l(μ)`.  Each mode has the potential
//! `φ_l(s) = 4π/(2l+1) [\int_0^s ρ_l t (t/s)^{l+1} dt + \int_s^∞ ρ_l t (s/t)^l dt]`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{legendre_table, GaussLegendre};

const RADIAL_ORDER: usize = 4;

/// Resolution of the radial grid and the angular expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxialGridSpec {
    /// Radial cell width.
    pub ds: f64,
    /// Radius beyond which sources are neglected.
    pub s_max: f64,
    /// Highest Legendre degree.
    pub l_max: usize,
    /// Gauss-Legendre nodes in `μ` for the projections.
    pub n_mu: usize,
}

impl Default for AxialGridSpec {
    fn default() -> Self {
        Self {
            ds: 0.02,
            s_max: 24.0,
            l_max: 12,
            n_mu: 48,
        }
    }
}

/// Radial Gauss-Legendre cells and angular rule shared by sources and potentials.
#[derive(Debug, Clone)]
pub struct AxialGrid {
    spec: AxialGridSpec,
    n_cells: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mu: GaussLegendre,
}

/// Legendre moments `ρ_l(s_q)` of a source at the radial nodes.
#[derive(Debug, Clone)]
pub struct AxialSource {
    moments: Vec<Vec<f64>>,
}

/// Potential modes `φ_l` at cell boundaries and radial nodes.
#[derive(Debug, Clone)]
pub struct AxialPotential {
    ds: f64,
    coef: Vec<f64>,
    phi: Vec<Vec<f64>>,
    dphi: Vec<Vec<f64>>,
    at_nodes: Vec<Vec<f64>>,
    exterior: Vec<f64>,
    s_max: f64,
}

impl AxialGrid {
    pub fn new(spec: AxialGridSpec) -> Result<Self> {
        if !(spec.ds > 0.0 && spec.s_max > spec.ds) {
            return Err(Error::invalid("axial grid", "need 0 < ds < s_max"));
        }
        if spec.n_mu < spec.l_max + 1 {
            return Err(Error::invalid("axial grid", "n_mu must exceed l_max"));
        }
        let n_cells = (spec.s_max / spec.ds).round() as usize;
        let ds = spec.s_max / n_cells as f64;
        let rule = GaussLegendre::new(RADIAL_ORDER);
        let mut nodes = Vec::with_capacity(n_cells * RADIAL_ORDER);
        let mut weights = Vec::with_capacity(n_cells * RADIAL_ORDER);
        for c in 0..n_cells {
            for (x, w) in rule.mapped(c as f64 * ds, (c + 1) as f64 * ds) {
                nodes.push(x);
                weights.push(w);
            }
        }
        Ok(Self {
            spec: AxialGridSpec { ds, ..spec },
            n_cells,
            nodes,
            weights,
            mu: GaussLegendre::new(spec.n_mu),
        })
    }

    pub fn spec(&self) -> AxialGridSpec {
        self.spec
    }

    pub fn l_max(&self) -> usize {
        self.spec.l_max
    }

    /// Number of radial quadrature nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Projects `f(s, μ)` onto Legendre modes at every radial node.
    pub fn source(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> AxialSource {
        let l_max = self.spec.l_max;
        let table: Vec<Vec<f64>> = self
            .mu
            .nodes()
            .iter()
            .map(|&mu| {
                let mut p = vec![0.0; l_max + 1];
                legendre_table(mu, &mut p);
                p
            })
            .collect();
        let per_node: Vec<Vec<f64>> = self
            .nodes
            .par_iter()
            .map(|&s| {
                let mut m = vec![0.0; l_max + 1];
                for (i, (&mu, &w)) in self.mu.nodes().iter().zip(self.mu.weights()).enumerate() {
                    let v = f(s, mu) * w;
                    if v == 0.0 {
                        continue;
                    }
                    for l in 0..=l_max {
                        m[l] += v * table[i][l];
                    }
                }
                for (l, x) in m.iter_mut().enumerate() {
                    *x *= (2 * l + 1) as f64 / 2.0;
                }
                m
            })
            .collect();
        let moments = (0..=l_max)
            .map(|l| per_node.iter().map(|m| m[l]).collect())
            .collect();
        AxialSource { moments }
    }

    /// `\int ρ dx`.
    pub fn charge(&self, source: &AxialSource) -> f64 {
        4.0 * PI
            * self
                .nodes
                .iter()
                .zip(&self.weights)
                .zip(&source.moments[0])
                .map(|((s, w), r)| w * r * s * s)
                .sum::<f64>()
    }

    /// Solves for the potential mode by mode.
    pub fn potential(&self, source: &AxialSource) -> AxialPotential {
        let n = self.n_cells;
        let ds = self.spec.ds;
        let l_max = self.spec.l_max;
        let bound = |c: usize| c as f64 * ds;
        let mut coef = Vec::with_capacity(l_max + 1);
        let mut phi = Vec::with_capacity(l_max + 1);
        let mut dphi = Vec::with_capacity(l_max + 1);
        let mut at_nodes = Vec::with_capacity(l_max + 1);
        let mut exterior = Vec::with_capacity(l_max + 1);
        for l in 0..=l_max {
            let rho = &source.moments[l];
            let lf = l as f64;
            let cl = 4.0 * PI / (2.0 * lf + 1.0);
            let mut inner = vec![0.0; n + 1];
            for c in 0..n {
                let s1 = bound(c + 1);
                let mut acc = inner[c] * (bound(c) / s1).powi(l as i32 + 1);
                for g in 0..RADIAL_ORDER {
                    let q = c * RADIAL_ORDER + g;
                    let t = self.nodes[q];
                    acc += self.weights[q] * rho[q] * t * (t / s1).powi(l as i32 + 1);
                }
                inner[c + 1] = acc;
            }
            let mut outer = vec![0.0; n + 1];
            for c in (0..n).rev() {
                let s0 = bound(c);
                let s1 = bound(c + 1);
                let mut acc = outer[c + 1] * (s0 / s1).powi(l as i32);
                for g in 0..RADIAL_ORDER {
                    let q = c * RADIAL_ORDER + g;
                    let t = self.nodes[q];
                    acc += self.weights[q] * rho[q] * t * (s0 / t).powi(l as i32);
                }
                outer[c] = acc;
            }
            let mut p = vec![0.0; n + 1];
            let mut dp = vec![0.0; n + 1];
            for c in 0..=n {
                p[c] = cl * (inner[c] + outer[c]);
                if c > 0 {
                    dp[c] = cl * (-(lf + 1.0) * inner[c] + lf * outer[c]) / bound(c);
                }
            }
            if l == 1 {
                let j: f64 = self.weights.iter().zip(rho).map(|(w, r)| w * r).sum();
                dp[0] = cl * j;
            }
            let nodes: Vec<f64> = self
                .nodes
                .iter()
                .map(|&s| hermite(&p, &dp, ds, s))
                .collect();
            coef.push(cl);
            exterior.push(cl * inner[n]);
            phi.push(p);
            dphi.push(dp);
            at_nodes.push(nodes);
        }
        AxialPotential {
            ds,
            coef,
            phi,
            dphi,
            at_nodes,
            exterior,
            s_max: self.spec.s_max,
        }
    }

    /// `\int ρ_a φ_b dx`.
    pub fn pairing(&self, a: &AxialSource, b: &AxialPotential) -> f64 {
        self.pairing_truncated(a, b, self.spec.l_max)
    }

    /// [`Self::pairing`] keeping only degrees `l ≤ l_cut`.
    pub fn pairing_truncated(&self, a: &AxialSource, b: &AxialPotential, l_cut: usize) -> f64 {
        let mut total = 0.0;
        for l in 0..=l_cut.min(self.spec.l_max) {
            let s: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .zip(a.moments[l].iter().zip(&b.at_nodes[l]))
                .map(|((s, w), (r, p))| w * r * p * s * s)
                .sum();
            total += b.coef[l] * s;
        }
        total
    }
}

fn hermite(p: &[f64], dp: &[f64], ds: f64, s: f64) -> f64 {
    let n = p.len() - 1;
    let x = s / ds;
    let i = (x.floor() as usize).min(n - 1);
    let t = x - i as f64;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p[i]
        + (t3 - 2.0 * t2 + t) * dp[i] * ds
        + (-2.0 * t3 + 3.0 * t2) * p[i + 1]
        + (t3 - t2) * dp[i + 1] * ds
}

impl AxialSource {
    /// Moment `ρ_l` at the radial nodes.
    pub fn moment(&self, l: usize) -> &[f64] {
        &self.moments[l]
    }

    /// Largest absolute moment of degree `l`.
    pub fn moment_size(&self, l: usize) -> f64 {
        self.moments[l].iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}

impl AxialPotential {
    /// `φ(s, μ)`; beyond the grid only the exterior multipoles remain.
    pub fn eval(&self, s: f64, mu: f64) -> f64 {
        let l_max = self.coef.len() - 1;
        let mut p = [0.0; 64];
        let p = &mut p[..=l_max];
        legendre_table(mu.clamp(-1.0, 1.0), p);
        if s >= self.s_max {
            let mut total = 0.0;
            let ratio = self.s_max / s;
            let mut scale = ratio;
            for l in 0..=l_max {
                total += self.exterior[l] * scale * p[l];
                scale *= ratio;
            }
            return total;
        }
        let n = self.phi[0].len() - 1;
        let x = s / self.ds;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + t) * self.ds;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * self.ds;
        let mut total = 0.0;
        for l in 0..=l_max {
            let v = h00 * self.phi[l][i] + h10 * self.dphi[l][i] + h01 * self.phi[l][i + 1] + h11 * self.dphi[l][i + 1];
            total += v * p[l];
        }
        total
    }

    /// Total charge seen from far away.
    pub fn monopole(&self) -> f64 {
        self.exterior[0] * self.s_max
    }
}
