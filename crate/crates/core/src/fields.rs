//! Evaluation of ring-symmetric fields built from one axisymmetric bump profile.
//!
//! Every bump `j` carries a local frame in which `P_j` sits at `(r, 0, 0)`
//! after rotating by `-2πj/k`; the local coordinate is `y = R_j^{-1} x - P_1`.
//! A bump function depends on `s = |y|` and `μ = y_1 / s` only.

use crate::geometry::BumpConfiguration;
use crate::multipole::{AxialGrid, AxialPotential, AxialSource};
use crate::potentials::PotentialModel;

/// Rotations of the ring and the set of bumps treated as near neighbours of `P_1`.
#[derive(Debug, Clone)]
pub struct RingFrame {
    config: BumpConfiguration,
    cos: Vec<f64>,
    sin: Vec<f64>,
    near: Vec<usize>,
}

impl RingFrame {
    /// Frame with `neighbours` bumps on each side of `P_1` counted as near.
    pub fn new(config: BumpConfiguration, neighbours: usize) -> Self {
        let k = config.count();
        let (sin, cos): (Vec<f64>, Vec<f64>) = (0..k).map(|j| config.angle(j).sin_cos()).unzip();
        let mut near = vec![0];
        for o in 1..=neighbours.min(k / 2) {
            near.push(o % k);
            near.push((k - o) % k);
        }
        near.sort_unstable();
        near.dedup();
        Self {
            config,
            cos,
            sin,
            near,
        }
    }

    pub fn config(&self) -> &BumpConfiguration {
        &self.config
    }

    /// Bumps whose fields are summed when evaluating near `P_1`.
    pub fn near(&self) -> &[usize] {
        &self.near
    }

    /// Local coordinate of `x` relative to bump `j`.
    pub fn local(&self, j: usize, x: &[f64; 3]) -> [f64; 3] {
        let (c, s) = (self.cos[j], self.sin[j]);
        [
            c * x[0] + s * x[1] - self.config.radius(),
            -s * x[0] + c * x[1],
            x[2],
        ]
    }

    /// Rotates a local vector of bump `j` back to global axes.
    pub fn to_global(&self, j: usize, v: &[f64; 3]) -> [f64; 3] {
        let (c, s) = (self.cos[j], self.sin[j]);
        [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
    }
}

/// `(s, μ)` of a local coordinate.
pub fn polar(y: &[f64; 3]) -> (f64, f64) {
    let s = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let mu = if s > 0.0 { y[0] / s } else { 1.0 };
    (s, mu)
}

/// `V(|P_1 + y|) g(s, μ)^2` as an axisymmetric source about `P_1`.
pub fn bump_source(
    grid: &AxialGrid,
    radius: f64,
    potential: &PotentialModel,
    g: impl Fn(f64, f64) -> f64 + Sync,
) -> AxialSource {
    grid.source(|s, mu| {
        let x = (radius * radius + s * s + 2.0 * radius * s * mu).max(0.0).sqrt();
        let v = g(s, mu);
        potential.value(x) * v * v
    })
}

/// Sum over all bumps of one axisymmetric potential.
pub fn ring_potential(frame: &RingFrame, potential: &AxialPotential, x: &[f64; 3]) -> f64 {
    (0..frame.config.count())
        .map(|j| {
            let (s, mu) = polar(&frame.local(j, x));
            potential.eval(s, mu)
        })
        .sum()
}

/// Axisymmetric bump function described in local coordinates.
pub trait LocalField: Sync {
    /// Value and local gradient at `y`.
    fn value_grad(&self, y: &[f64; 3]) -> (f64, [f64; 3]);

    /// Value in polar form.
    fn value_polar(&self, s: f64, mu: f64) -> f64;
}

/// Symmetrised field `\sum_{j near} f(local_j(x))` with its global gradient.
pub fn ring_field(frame: &RingFrame, f: &dyn LocalField, x: &[f64; 3]) -> (f64, [f64; 3]) {
    let mut v = 0.0;
    let mut g = [0.0; 3];
    for &j in frame.near() {
        let (fv, fg) = f.value_grad(&frame.local(j, x));
        v += fv;
        let gg = frame.to_global(j, &fg);
        for a in 0..3 {
            g[a] += gg[a];
        }
    }
    (v, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_frame_puts_every_bump_at_origin() {
        let c = BumpConfiguration::new(7, 3.0).unwrap();
        let f = RingFrame::new(c, 2);
        for j in 0..7 {
            let y = f.local(j, &c.position(j));
            assert!(y.iter().all(|v| v.abs() < 1e-12));
            let back = f.to_global(j, &[1.0, 0.0, 0.0]);
            let p = c.position(j);
            assert!((back[0] - p[0] / 3.0).abs() < 1e-12 && (back[1] - p[1] / 3.0).abs() < 1e-12);
        }
        assert_eq!(f.near(), &[0, 1, 2, 5, 6]);
    }
}
