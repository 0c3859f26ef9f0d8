//! External potentials `V`, radial densities and their Newton potentials.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::GroundStateProfile;
use crate::quadrature::{adaptive_2d, exp_power_tail, QuadratureSpec};

const FOUR_PI: f64 = 4.0 * PI;

/// Shape of the external potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "variant")]
pub enum PotentialVariant {
    /// `a / (1 + r)^m`.
    Shifted,
    /// `a / (1 + r^m)`.
    Soft,
    /// `min(a cap, a / r^m)`, exactly `a / r^m` for `r ≥ cap^{-1/m}`.
    Capped { cap: f64 },
    /// `V ≡ a`, used for degenerate checks.
    Constant,
}

/// Radially symmetric potential `V(|x|) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub variant: PotentialVariant,
    pub a: f64,
    pub m: f64,
}

impl PotentialModel {
    /// Decaying potential with amplitude `a` and decay exponent `m > 3/2`.
    pub fn new(variant: PotentialVariant, a: f64, m: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("a", format!("amplitude must be positive, got {a}")));
        }
        match variant {
            PotentialVariant::Constant => {}
            _ if !(m > 1.5 && m.is_finite()) => {
                return Err(Error::invalid("m", format!("decay exponent must exceed 3/2, got {m}")))
            }
            PotentialVariant::Capped { cap } if !(cap > 0.0 && cap.is_finite()) => {
                return Err(Error::invalid("cap", format!("must be positive, got {cap}")))
            }
            _ => {}
        }
        Ok(Self { variant, a, m })
    }

    /// `V ≡ value` for `value ≥ 0`.
    pub fn constant(value: f64) -> Self {
        assert!(value >= 0.0, "constant potential must be non-negative");
        Self {
            variant: PotentialVariant::Constant,
            a: value,
            m: 0.0,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.variant {
            PotentialVariant::Shifted => self.a / (1.0 + r).powf(self.m),
            PotentialVariant::Soft => self.a / (1.0 + r.powf(self.m)),
            PotentialVariant::Capped { cap } => {
                if r == 0.0 {
                    self.a * cap
                } else {
                    (self.a * cap).min(self.a / r.powf(self.m))
                }
            }
            PotentialVariant::Constant => self.a,
        }
    }

    /// Supremum of `V`.
    pub fn bound(&self) -> f64 {
        match self.variant {
            PotentialVariant::Capped { cap } => self.a * cap,
            _ => self.a,
        }
    }

    /// Exponent `θ` with `V(r) = a r^{-m} (1 + O(r^{-θ}))`; `None` when `V`
    /// does not decay and infinity when the far field is exact.
    pub fn correction_exponent(&self) -> Option<f64> {
        match self.variant {
            PotentialVariant::Shifted => Some(1.0),
            PotentialVariant::Soft => Some(self.m),
            PotentialVariant::Capped { .. } => Some(f64::INFINITY),
            PotentialVariant::Constant => None,
        }
    }

    /// Power of `r` in the far field, `-m`, or 0 for a constant.
    pub fn far_power(&self) -> f64 {
        match self.variant {
            PotentialVariant::Constant => 0.0,
            _ => -self.m,
        }
    }
}

/// Analytic continuation of a radial function beyond its sampled range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialTail {
    Zero,
    /// `coef r^power e^{-rate r}`.
    ExpPower { coef: f64, rate: f64, power: f64 },
    /// `coef r^{-power}`.
    InversePower { coef: f64, power: f64 },
}

impl RadialTail {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RadialTail::Zero => 0.0,
            RadialTail::ExpPower { coef, rate, power } => coef * r.powf(power) * (-rate * r).exp(),
            RadialTail::InversePower { coef, power } => coef * r.powf(-power),
        }
    }

    /// `\int_r^\infty tail(t) t^j dt`, infinite when divergent.
    pub fn moment(&self, r: f64, j: f64) -> f64 {
        match *self {
            RadialTail::Zero => 0.0,
            RadialTail::ExpPower { coef, rate, power } => exp_power_tail(coef, power + j, rate, r),
            RadialTail::InversePower { coef, power } => {
                let e = power - j;
                if coef == 0.0 {
                    0.0
                } else if e > 1.0 {
                    coef * r.powf(1.0 - e) / (e - 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn encode(&self) -> String {
        match *self {
            RadialTail::Zero => "zero".into(),
            RadialTail::ExpPower { coef, rate, power } => format!("exp:{coef:.16e},{rate},{power}"),
            RadialTail::InversePower { coef, power } => format!("inv:{coef:.16e},{power}"),
        }
    }

    fn decode(s: &str) -> Option<Self> {
        if s == "zero" {
            return Some(RadialTail::Zero);
        }
        let (kind, rest) = s.split_once(':')?;
        let nums: Vec<f64> = rest.split(',').map(|t| t.parse().ok()).collect::<Option<_>>()?;
        match (kind, nums.as_slice()) {
            ("exp", [coef, rate, power]) => Some(RadialTail::ExpPower {
                coef: *coef,
                rate: *rate,
                power: *power,
            }),
            ("inv", [coef, power]) => Some(RadialTail::InversePower {
                coef: *coef,
                power: *power,
            }),
            _ => None,
        }
    }
}

/// Radial function sampled on `r_i = i h`, `i = 0..=n`, with an analytic tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    h: f64,
    values: Vec<f64>,
    tail: RadialTail,
}

impl RadialDensity {
    pub fn new(h: f64, values: Vec<f64>, tail: RadialTail) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("h", "grid step must be positive"));
        }
        if values.len() < 4 {
            return Err(Error::invalid("values", "need at least four samples"));
        }
        Ok(Self { h, values, tail })
    }

    /// Samples `f` on `[0, r_max]` with about `r_max / h` intervals.
    pub fn from_fn(h: f64, r_max: f64, f: impl Fn(f64) -> f64, tail: RadialTail) -> Result<Self> {
        let n = (r_max / h).round().max(3.0) as usize;
        let h = r_max / n as f64;
        Self::new(h, (0..=n).map(|i| f(i as f64 * h)).collect(), tail)
    }

    /// `V(r) U(r)^q` on the profile grid with a tail matched at the last node.
    pub fn from_profile(profile: &GroundStateProfile, q: f64, potential: &PotentialModel) -> Result<Self> {
        let h = profile.step();
        let values: Vec<f64> = profile
            .values()
            .iter()
            .enumerate()
            .map(|(i, &u)| potential.value(i as f64 * h) * u.powf(q))
            .collect();
        let r_n = profile.r_max();
        let last = *values.last().unwrap();
        let power = -q + potential.far_power();
        let tail = if last > 0.0 {
            RadialTail::ExpPower {
                coef: last / (r_n.powf(power) * (-q * r_n).exp()),
                rate: q,
                power,
            }
        } else {
            RadialTail::Zero
        };
        Self::new(h, values, tail)
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> RadialTail {
        self.tail
    }

    pub fn r_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.h
    }

    /// Four-point Lagrange interpolation inside the grid, the tail beyond.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let n = self.values.len() - 1;
        if r > self.r_max() {
            return self.tail.eval(r);
        }
        let x = r / self.h;
        let i = (x.floor() as usize).min(n - 1);
        let start = i.saturating_sub(1).min(n - 3);
        let t = x - start as f64;
        let f = &self.values[start..start + 4];
        let (t0, t1, t2, t3) = (t, t - 1.0, t - 2.0, t - 3.0);
        -f[0] * t1 * t2 * t3 / 6.0 + f[1] * t0 * t2 * t3 / 2.0 - f[2] * t0 * t1 * t3 / 2.0
            + f[3] * t0 * t1 * t2 / 6.0
    }

    /// `\int_{R^3} f dx`.
    pub fn charge(&self) -> f64 {
        let g: Vec<f64> = self.samples_times_power(2);
        let cells = cell_integrals(&g, self.h);
        FOUR_PI * (cells.iter().sum::<f64>() + self.tail.moment(self.r_max(), 2.0))
    }

    /// Largest relative mismatch between samples and tail over the last tenth of the grid.
    pub fn tail_mismatch(&self) -> f64 {
        let n = self.values.len() - 1;
        (n - n / 10..=n)
            .filter(|&i| self.values[i] != 0.0)
            .map(|i| (self.tail.eval(i as f64 * self.h) / self.values[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn samples_times_power(&self, j: i32) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &f)| f * (i as f64 * self.h).powi(j))
            .collect()
    }

    /// Writes the `SPMB-D v1` text format through a temporary file.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            writeln!(
                w,
                "SPMB-D v1 h={} rmax={} tail={}",
                self.h,
                self.r_max(),
                self.tail.encode()
            )?;
            for (i, f) in self.values.iter().enumerate() {
                writeln!(w, "{:.16e} {:.16e}", i as f64 * self.h, f)?;
            }
            w.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let fail = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let mut lines = BufReader::new(fs::File::open(path)?).lines();
        let header = lines.next().ok_or_else(|| fail("empty file".into()))??;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.first() != Some(&"SPMB-D") {
            return Err(fail("missing SPMB-D magic".into()));
        }
        if tokens.get(1) != Some(&"v1") {
            return Err(fail(format!("unsupported version {:?}", tokens.get(1))));
        }
        let get = |name: &str| -> Result<&str> {
            tokens
                .iter()
                .find_map(|t| t.strip_prefix(name).and_then(|s| s.strip_prefix('=')))
                .ok_or_else(|| fail(format!("missing {name}")))
        };
        let h: f64 = get("h")?.parse().map_err(|e| fail(format!("h: {e}")))?;
        let tail = RadialTail::decode(get("tail")?).ok_or_else(|| fail("bad tail".into()))?;
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            let mut cols = line.split_whitespace();
            if let (Some(_), Some(f)) = (cols.next(), cols.next()) {
                values.push(f.parse::<f64>().map_err(|e| fail(format!("value: {e}")))?);
            }
        }
        Self::new(h, values, tail)
    }
}

/// Integrals of the cubic interpolant of `g` over each grid cell.
fn cell_integrals(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len() - 1;
    (0..n)
        .map(|i| {
            let s = if i == 0 {
                9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]
            } else if i == n - 1 {
                g[n - 3] - 5.0 * g[n - 2] + 19.0 * g[n - 1] + 9.0 * g[n]
            } else {
                -g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2]
            };
            s * h / 24.0
        })
        .collect()
}

/// Newton potential `φ = f * 1/|x|` of a radial density, tabulated as
/// `φ(r) = M(r)/r + N(r)` with `M(r) = 4π\int_0^r f t^2` and
/// `N(r) = 4π\int_r^\infty f t`.
#[derive(Debug, Clone)]
pub struct NewtonPotential {
    h: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    total_charge: f64,
    tail: RadialTail,
}

impl NewtonPotential {
    pub fn new(f: &RadialDensity) -> Result<Self> {
        let h = f.h;
        let n = f.values.len() - 1;
        let r_max = f.r_max();
        let tail2 = f.tail.moment(r_max, 2.0);
        let tail1 = f.tail.moment(r_max, 1.0);
        if !tail2.is_finite() || !tail1.is_finite() {
            return Err(Error::invalid("density", "tail is not integrable against 1/|x|"));
        }
        let c2 = cell_integrals(&f.samples_times_power(2), h);
        let c1 = cell_integrals(&f.samples_times_power(1), h);
        let mut m = vec![0.0; n + 1];
        for i in 0..n {
            m[i + 1] = m[i] + FOUR_PI * c2[i];
        }
        let mut nn = vec![0.0; n + 1];
        nn[n] = FOUR_PI * tail1;
        for i in (0..n).rev() {
            nn[i] = nn[i + 1] + FOUR_PI * c1[i];
        }
        let mut phi = vec![0.0; n + 1];
        let mut dphi = vec![0.0; n + 1];
        phi[0] = nn[0];
        for i in 1..=n {
            let r = i as f64 * h;
            phi[i] = m[i] / r + nn[i];
            dphi[i] = -m[i] / (r * r);
        }
        Ok(Self {
            h,
            phi,
            dphi,
            total_charge: m[n] + FOUR_PI * tail2,
            tail: f.tail,
        })
    }

    pub fn r_max(&self) -> f64 {
        (self.phi.len() - 1) as f64 * self.h
    }

    /// `\int f dx`.
    pub fn total_charge(&self) -> f64 {
        self.total_charge
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let n = self.phi.len() - 1;
        if r >= self.r_max() {
            let m = self.total_charge - FOUR_PI * self.tail.moment(r, 2.0);
            return m / r + FOUR_PI * self.tail.moment(r, 1.0);
        }
        let x = r / self.h;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.phi[i]
            + (t3 - 2.0 * t2 + t) * self.dphi[i] * self.h
            + (-2.0 * t3 + 3.0 * t2) * self.phi[i + 1]
            + (t3 - t2) * self.dphi[i + 1] * self.h
    }
}

/// `φ_f(r)` for a single radius.
pub fn newton_potential_radial(f: &RadialDensity, r: f64) -> Result<f64> {
    Ok(NewtonPotential::new(f)?.eval(r))
}

/// Potential `φ_u` of the source `V u^2` for a radial profile, sampled on
/// the profile grid with a `Q/r` tail.
pub fn phi_of_radial_source(profile: &GroundStateProfile, potential: &PotentialModel) -> Result<RadialDensity> {
    let source = RadialDensity::from_profile(profile, 2.0, potential)?;
    let newton = NewtonPotential::new(&source)?;
    let h = source.h;
    let values = (0..source.values.len()).map(|i| newton.eval(i as f64 * h)).collect();
    RadialDensity::new(
        h,
        values,
        RadialTail::InversePower {
            coef: newton.total_charge(),
            power: 1.0,
        },
    )
}

fn effective_extent(f: &RadialDensity) -> Result<f64> {
    match f.tail {
        RadialTail::Zero => Ok(f.r_max()),
        RadialTail::ExpPower { rate, .. } if rate > 0.0 => Ok(f.r_max() + 36.0 / rate),
        _ => Err(Error::invalid("density", "tail must be zero or exponentially decaying")),
    }
}

/// Coulomb pairing `\int g(|y|) φ_f(|y - d e_1|) dy` by nested adaptive
/// quadrature in cylindrical coordinates `(z, ρ)` about the axis through both centres.
pub fn coulomb_pair_integral(f: &RadialDensity, g: &RadialDensity, d: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::invalid("d", "separation must be non-negative"));
    }
    let phi = NewtonPotential::new(f)?;
    let r_g = effective_extent(g)?;
    let kink = match f.tail {
        RadialTail::Zero => Some(f.r_max()),
        _ => None,
    };
    let mut outer = vec![-r_g, r_g, 0.0];
    if d < r_g {
        outer.push(d);
    }
    if let Some(rf) = kink {
        outer.extend([d - rf, d + rf].into_iter().filter(|z| z.abs() < r_g));
    }
    outer.sort_by(f64::total_cmp);
    outer.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let inner = |z: f64| -> Vec<f64> {
        let top = (r_g * r_g - z * z).max(0.0).sqrt();
        let mut b = vec![0.0, top];
        for s in [1.0, 4.0] {
            if s < top {
                b.push(s);
            }
        }
        if let Some(rf) = kink {
            let q = rf * rf - (z - d) * (z - d);
            if q > 0.0 && q.sqrt() < top {
                b.push(q.sqrt());
            }
        }
        b.sort_by(f64::total_cmp);
        b
    };
    let est = adaptive_2d(
        |z, rho| {
            let rg = (z * z + rho * rho).sqrt();
            let rf = ((z - d) * (z - d) + rho * rho).sqrt();
            2.0 * PI * rho * g.eval(rg) * phi.eval(rf)
        },
        &outer,
        inner,
        spec,
    )?;
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::find_ground_state;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn cubic() -> &'static GroundStateProfile {
        static PROFILE: OnceLock<GroundStateProfile> = OnceLock::new();
        PROFILE.get_or_init(|| find_ground_state(3.0, 1e-12).unwrap())
    }

    fn ball() -> RadialDensity {
        RadialDensity::from_fn(1e-3, 1.0, |_| 1.0, RadialTail::Zero).unwrap()
    }

    #[test]
    fn uniform_ball_potential() {
        let phi = NewtonPotential::new(&ball()).unwrap();
        assert!((phi.eval(0.0) - 2.0 * PI).abs() < 1e-6);
        assert!((phi.eval(2.0) - FOUR_PI / 3.0 / 2.0).abs() < 1e-9);
        // Interior: 2π(1 - r^2/3)
        assert!((phi.eval(0.5) - 2.0 * PI * (1.0 - 0.25 / 3.0)).abs() < 1e-6);
    }

    #[test]
    fn uniform_ball_pair_integrals() {
        let spec = QuadratureSpec::default();
        let b = ball();
        let exact_far = (FOUR_PI / 3.0).powi(2) / 3.0;
        let far = coulomb_pair_integral(&b, &b, 3.0, &spec).unwrap();
        assert!((far - exact_far).abs() / exact_far < 1e-5);
        let self_energy = coulomb_pair_integral(&b, &b, 0.0, &spec).unwrap();
        let exact_self = 32.0 * PI * PI / 15.0;
        assert!((self_energy - exact_self).abs() / exact_self < 1e-5);
    }

    #[test]
    fn newton_theorem_outside_support() {
        let f = RadialDensity::from_fn(1e-3, 3.0, |r| (1.0 - r / 3.0).powi(2), RadialTail::Zero).unwrap();
        let phi = NewtonPotential::new(&f).unwrap();
        let q = f.charge();
        for r in [3.0, 5.0, 40.0] {
            assert!((phi.eval(r) * r - q).abs() < 1e-10 * q);
        }
    }

    #[test]
    fn profile_square_pair_at_large_separation() {
        let v = PotentialModel::constant(1.0);
        let u2 = RadialDensity::from_profile(cubic(), 2.0, &v).unwrap();
        let m = cubic().integral_moment(2.0);
        let d = 50.0;
        let pair = coulomb_pair_integral(&u2, &u2, d, &QuadratureSpec::default()).unwrap();
        assert!((d * pair - m * m).abs() / (m * m) < 0.02);
    }

    #[test]
    fn zero_potential_gives_zero_field() {
        let phi = phi_of_radial_source(cubic(), &PotentialModel::constant(0.0)).unwrap();
        assert!(phi.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn potential_far_field_carries_total_charge() {
        let v = PotentialModel::new(PotentialVariant::Shifted, 1.0, 2.0).unwrap();
        let phi = phi_of_radial_source(cubic(), &v).unwrap();
        let q = RadialDensity::from_profile(cubic(), 2.0, &v).unwrap().charge();
        let r = 3.0 * cubic().r_max();
        assert!((r * phi.eval(r) - q).abs() / q < 0.01);
        assert!(phi.tail_mismatch() < 0.02);
    }

    #[test]
    fn source_tail_matches_samples() {
        let v = PotentialModel::new(PotentialVariant::Shifted, 1.0, 2.0).unwrap();
        let f = RadialDensity::from_profile(cubic(), 2.0, &v).unwrap();
        assert!(f.tail_mismatch() < 0.02, "{}", f.tail_mismatch());
    }

    #[test]
    fn density_file_round_trip() {
        let f = RadialDensity::from_fn(0.01, 2.0, |r| (-r).exp(), RadialTail::ExpPower {
            coef: 1.0,
            rate: 1.0,
            power: 0.0,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.spmbd");
        f.write_to(&path).unwrap();
        assert_eq!(RadialDensity::read_from(&path).unwrap(), f);
    }

    #[test]
    fn potential_variants_are_bounded_and_decay() {
        for variant in [
            PotentialVariant::Shifted,
            PotentialVariant::Soft,
            PotentialVariant::Capped { cap: 1.0 },
        ] {
            let v = PotentialModel::new(variant, 1.0, 2.0).unwrap();
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let r = i as f64 * 0.5;
                let x = v.value(r);
                assert!(x >= 0.0 && x <= v.bound() && x <= prev);
                prev = x;
            }
            let r = 1e4;
            assert!((v.value(r) * r * r - 1.0).abs() < 1e-3);
        }
        assert!(PotentialModel::new(PotentialVariant::Shifted, 1.0, 1.4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn pair_integral_is_monotone_in_separation(d0 in 0.0f64..4.0, step in 0.1f64..2.0) {
            let b = RadialDensity::from_fn(2e-3, 1.0, |r| 1.0 - r * r, RadialTail::Zero).unwrap();
            let spec = QuadratureSpec::default().with_rel_tol(1e-7);
            let near = coulomb_pair_integral(&b, &b, d0, &spec).unwrap();
            let far = coulomb_pair_integral(&b, &b, d0 + step, &spec).unwrap();
            prop_assert!(far <= near * (1.0 + 1e-6));
        }

        #[test]
        fn field_energy_scales_quadratically(eps in 0.01f64..0.5) {
            // ‖∇φ‖^2 = \int f φ_f, so ‖φ_{(1+ε)f} - φ_f‖ = ε ‖φ_f‖.
            let f = RadialDensity::from_fn(1e-2, 2.0, |r| (1.0 - r / 2.0).powi(3), RadialTail::Zero).unwrap();
            let scaled = RadialDensity::new(f.step(), f.values().iter().map(|v| v * eps).collect(), RadialTail::Zero).unwrap();
            let spec = QuadratureSpec::default().with_rel_tol(1e-8);
            let base = coulomb_pair_integral(&f, &f, 0.0, &spec).unwrap();
            let diff = coulomb_pair_integral(&scaled, &scaled, 0.0, &spec).unwrap();
            prop_assert!(((diff / base).sqrt() - eps).abs() < 1e-6 * eps.max(1e-2) + 1e-9);
        }
    }
}
