//! Polygonal bump configurations, distance sums and the radius window.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

/// `k` points `P_j = (r cos 2(j-1)π/k, r sin 2(j-1)π/k, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpConfiguration {
    k: usize,
    r: f64,
}

impl BumpConfiguration {
    /// Regular polygon with `k ≥ 2` vertices on the circle of radius `r > 0`.
    pub fn new(k: usize, r: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidCount { k });
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("r", format!("radius must be positive, got {r}")));
        }
        Ok(Self { k, r })
    }

    /// Degenerate single bump at `(r, 0, 0)`; `r = 0` places it at the origin.
    pub fn single(r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid("r", format!("radius must be non-negative, got {r}")));
        }
        Ok(Self { k: 1, r })
    }

    pub fn count(&self) -> usize {
        self.k
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    /// Angle of bump `j` (zero-based).
    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.k as f64
    }

    /// Position of bump `j` (zero-based).
    pub fn position(&self, j: usize) -> [f64; 3] {
        let t = self.angle(j);
        [self.r * t.cos(), self.r * t.sin(), 0.0]
    }

    /// Positions of all bumps.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.k).map(|j| self.position(j)).collect()
    }

    /// `|P_1 - P_j|` for the zero-based offset `j`, `2r |sin(jπ/k)|`.
    pub fn distance_from_first(&self, j: usize) -> f64 {
        2.0 * self.r * (PI * j as f64 / self.k as f64).sin().abs()
    }

    /// Nearest-neighbour distance `2 r sin(π/k)`.
    pub fn min_gap(&self) -> f64 {
        if self.k < 2 {
            f64::INFINITY
        } else {
            self.distance_from_first(1)
        }
    }

    /// Half-width `r sin(π/k)` of the sector around the first bump.
    pub fn sector_half_gap(&self) -> f64 {
        0.5 * self.min_gap()
    }
}

/// `|P_i - P_j|` for one-based indices.
pub fn pairwise_distance(config: &BumpConfiguration, i: usize, j: usize) -> Result<f64> {
    let k = config.count();
    for idx in [i, j] {
        if idx == 0 || idx > k {
            return Err(Error::IndexOutOfRange { index: idx, k });
        }
    }
    Ok(2.0 * config.radius() * ((i as f64 - j as f64) * PI / k as f64).sin().abs())
}

/// Exact and asymptotic forms of `\sum_{i=2}^k 1/|P_1 - P_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseDistanceSum {
    /// Direct pairwise summation over all `k - 1` distances.
    pub exact: f64,
    /// `(1/r) [ \sum_{i=1}^{⌊(k-1)/2⌋} 1/sin(iπ/k) + (1 + (-1)^k)/4 ]`.
    pub folded: f64,
    /// `k log k / (π r)`.
    pub asymptotic: f64,
}

pub fn inverse_distance_sum(k: usize, r: f64) -> Result<InverseDistanceSum> {
    let config = BumpConfiguration::new(k, r)?;
    let exact = pairwise_sum(k - 1, &|i| 1.0 / config.distance_from_first(i + 1));
    let kf = k as f64;
    let half = (k - 1) / 2;
    let folded_sin = pairwise_sum(half, &|i| 1.0 / (PI * (i + 1) as f64 / kf).sin());
    let parity = if k % 2 == 0 { 0.5 } else { 0.0 };
    Ok(InverseDistanceSum {
        exact,
        folded: (folded_sin + parity) / r,
        asymptotic: kf * kf.ln() / (PI * r),
    })
}

/// `s_k = (1/(k log k)) \sum_{i=1}^{k-1} 1/sin(iπ/k)`, which tends to `1/π`.
pub fn normalized_cosecant_sum(k: usize) -> f64 {
    let kf = k as f64;
    let s = pairwise_sum(k - 1, &|i| 1.0 / (PI * (i + 1) as f64 / kf).sin());
    s / (kf * kf.ln())
}

/// Admissible radii `[(m/π - β) k log k, (m/π + β) k log k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusWindow {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
}

impl RadiusWindow {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `r / (k log k)` for a radius.
    pub fn ratio(&self, r: f64) -> f64 {
        let k = self.k as f64;
        r / (k * k.ln())
    }

    /// Evenly spaced radii including both endpoints.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|i| self.lo + self.width() * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Default window half-width `0.1 m / π`.
pub fn default_beta(m: f64) -> f64 {
    0.1 * m / PI
}

pub fn radius_window(m: f64, beta: f64, k: usize) -> Result<RadiusWindow> {
    if k < 2 {
        return Err(Error::InvalidCount { k });
    }
    let limit = m / PI;
    if !(beta > 0.0 && beta < limit) {
        return Err(Error::InvalidBeta { beta, limit });
    }
    let kl = k as f64 * (k as f64).ln();
    Ok(RadiusWindow {
        k,
        lo: (limit - beta) * kl,
        hi: (limit + beta) * kl,
    })
}
