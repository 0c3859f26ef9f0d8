//! Quadrature over the sector `Ω_1` around the first bump and over balls.
//!
//! Nodes are laid out in spherical coordinates about `P_1` with the polar
//! axis along `e_1`.  Each ray is cut where it leaves the wedge
//! `|arg x| ≤ π/k`, so the integral of an `H_s`-invariant function over `R^3`
//! is `k` times the wedge integral.  Evenness in `x_2` and `x_3` folds the
//! wedge onto the quadrant `y_2, y_3 ≥ 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BumpConfiguration;
use crate::quadrature::GaussLegendre;

/// Node counts and reach of the sector quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorResolution {
    /// Gauss-Legendre nodes per radial panel.
    pub radial_order: usize,
    /// Nodes in `μ = cos θ` over `[-1, 1]`, in panels of eight.
    pub polar: usize,
    /// Nodes in the azimuth over a quarter turn, in panels of eight.
    pub azimuthal: usize,
    /// Radius of the integration region around the bump centre.
    pub reach: f64,
    /// Largest radial panel beyond the basis knots.
    pub max_panel: f64,
}

impl Default for SectorResolution {
    fn default() -> Self {
        Self {
            radial_order: 8,
            polar: 32,
            azimuthal: 16,
            reach: 16.0,
            max_panel: 1.0,
        }
    }
}

impl SectorResolution {
    /// Doubles the angular node counts.
    pub fn refined(&self) -> Self {
        Self {
            polar: 2 * self.polar,
            azimuthal: 2 * self.azimuthal,
            radial_order: self.radial_order + 4,
            ..*self
        }
    }
}

/// Quadrature node: absolute position and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub x: [f64; 3],
    pub w: f64,
}

/// Node set whose weighted sum, times `multiplicity`, approximates a
/// full-space integral.
#[derive(Debug, Clone)]
pub struct SectorGrid {
    pub nodes: Vec<QuadNode>,
    pub multiplicity: f64,
}

fn composite(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let panels = n.div_ceil(8).max(1);
    let per = n.div_ceil(panels).max(2);
    let rule = GaussLegendre::new(per);
    let mut out = Vec::with_capacity(panels * per);
    for i in 0..panels {
        let lo = a + (b - a) * i as f64 / panels as f64;
        let hi = a + (b - a) * (i + 1) as f64 / panels as f64;
        out.extend(rule.mapped(lo, hi));
    }
    out
}

fn radial_breaks(knots: &[f64], res: &SectorResolution) -> Vec<f64> {
    let mut b: Vec<f64> = std::iter::once(0.0)
        .chain(knots.iter().copied().filter(|&t| t > 0.0 && t < res.reach))
        .collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    // Panels grow gently away from the last knot.
    let mut width = 0.5 * res.max_panel;
    let mut t = *b.last().unwrap();
    while t + width < res.reach - 0.25 * width {
        t += width;
        b.push(t);
        width = (width * 1.25).min(res.max_panel * 2.0);
    }
    b.push(res.reach);
    b
}

fn ray_nodes(
    breaks: &[f64],
    limit: f64,
    rule: &GaussLegendre,
    dir: [f64; 3],
    centre: [f64; 3],
    w_ang: f64,
    out: &mut Vec<QuadNode>,
) {
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1].min(limit));
        if b <= a {
            break;
        }
        for (s, w) in rule.mapped(a, b) {
            out.push(QuadNode {
                x: [centre[0] + s * dir[0], centre[1] + s * dir[1], centre[2] + s * dir[2]],
                w: w * s * s * w_ang,
            });
        }
    }
}

impl SectorGrid {
    /// Nodes in the wedge around `P_1` (quadrant-folded), for `k ≥ 1`.
    pub fn wedge(config: &BumpConfiguration, knots: &[f64], res: &SectorResolution, max_nodes: u64) -> Result<Self> {
        let k = config.count();
        let centre = config.position(0);
        let breaks = radial_breaks(knots, res);
        let estimate = (breaks.len() as u64 - 1) * (res.radial_order * res.polar * res.azimuthal) as u64;
        if estimate > max_nodes {
            return Err(Error::QuadratureBudgetExceeded {
                needed: estimate,
                budget: max_nodes,
            });
        }
        let rule = GaussLegendre::new(res.radial_order);
        let polar = composite(res.polar, -1.0, 1.0);
        let azimuth = composite(res.azimuthal, 0.0, 0.5 * PI);
        let (h, n_plus) = if k >= 2 {
            let t = PI / k as f64;
            (config.radius() * t.sin(), [-t.sin(), t.cos(), 0.0])
        } else {
            (f64::INFINITY, [0.0, 0.0, 0.0])
        };
        let mut nodes = Vec::with_capacity(estimate as usize);
        for &(mu, wm) in &polar {
            let sin_t = (1.0 - mu * mu).max(0.0).sqrt();
            for &(ph, wp) in &azimuth {
                let dir = [mu, sin_t * ph.cos(), sin_t * ph.sin()];
                let dn = dir[0] * n_plus[0] + dir[1] * n_plus[1];
                let limit = if dn > 0.0 { h / dn } else { f64::INFINITY };
                ray_nodes(&breaks, limit, &rule, dir, centre, wm * wp, &mut nodes);
            }
        }
        Ok(Self {
            nodes,
            multiplicity: 4.0 * k as f64,
        })
    }

    /// Nodes filling the ball of radius `res.reach` about `centre`, unfolded.
    pub fn ball(centre: [f64; 3], knots: &[f64], res: &SectorResolution, max_nodes: u64) -> Result<Self> {
        let breaks = radial_breaks(knots, res);
        let estimate = (breaks.len() as u64 - 1) * (res.radial_order * res.polar * 4 * res.azimuthal) as u64;
        if estimate > max_nodes {
            return Err(Error::QuadratureBudgetExceeded {
                needed: estimate,
                budget: max_nodes,
            });
        }
        let rule = GaussLegendre::new(res.radial_order);
        let polar = composite(res.polar, -1.0, 1.0);
        let azimuth = composite(4 * res.azimuthal, 0.0, 2.0 * PI);
        let mut nodes = Vec::with_capacity(estimate as usize);
        for &(mu, wm) in &polar {
            let sin_t = (1.0 - mu * mu).max(0.0).sqrt();
            for &(ph, wp) in &azimuth {
                let dir = [mu, sin_t * ph.cos(), sin_t * ph.sin()];
                ray_nodes(&breaks, f64::INFINITY, &rule, dir, centre, wm * wp, &mut nodes);
            }
        }
        Ok(Self {
            nodes,
            multiplicity: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `multiplicity · \sum_q w_q f(x_q)`.
    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.multiplicity * self.nodes.iter().map(|n| n.w * f(&n.x)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volume_and_gaussian() {
        let res = SectorResolution {
            reach: 3.0,
            ..SectorResolution::default()
        };
        let g = SectorGrid::ball([1.0, 2.0, 3.0], &[], &res, u64::MAX).unwrap();
        let vol = g.integrate(|_| 1.0);
        assert!((vol - 4.0 / 3.0 * PI * 27.0).abs() < 1e-10);
        let res = SectorResolution::default();
        let g = SectorGrid::ball([0.0; 3], &[], &res, u64::MAX).unwrap();
        let gauss = g.integrate(|x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
        assert!((gauss - PI.powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn wedges_tile_a_rotation_invariant_integral() {
        // A function of |x| and x_3^2 only is invariant under the ring symmetries.
        for k in [2usize, 3, 8] {
            let c = BumpConfiguration::new(k, 4.0).unwrap();
            let res = SectorResolution {
                polar: 64,
                azimuthal: 64,
                ..SectorResolution::default()
            };
            let g = SectorGrid::wedge(&c, &[], &res, u64::MAX).unwrap();
            let f = |x: &[f64; 3]| {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                (-(rho - 4.0).powi(2) - x[2] * x[2]).exp()
            };
            let got = g.integrate(f);
            // \int e^{-(ρ-4)^2 - z^2} = π^{1/2} · 2π \int_0^∞ ρ e^{-(ρ-4)^2} dρ
            let radial = GaussLegendre::new(60).integrate(0.0, 12.0, |rho| rho * (-(rho - 4.0f64).powi(2)).exp());
            let exact = PI.sqrt() * 2.0 * PI * radial;
            assert!((got - exact).abs() / exact < 1e-4, "k = {k}: {got} vs {exact}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let c = BumpConfiguration::new(8, 10.0).unwrap();
        let err = SectorGrid::wedge(&c, &[], &SectorResolution::default(), 10).unwrap_err();
        assert!(err.is_budget());
    }
}
