//! Gauss-Legendre rules, adaptive Gauss-Kronrod integration in one and two
//! dimensions, and a few special functions used for analytic tails.

use std::cell::Cell;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and evaluation budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Relative tolerance on the integral.
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    pub abs_tol: f64,
    /// Maximum number of integrand evaluations for one integral.
    pub max_evals: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-300,
            max_evals: 100_000_000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_evals(mut self, max_evals: u64) -> Self {
        self.max_evals = max_evals;
        self
    }
}

/// Evaluation counter shared by nested integrations.
#[derive(Debug)]
pub struct EvalBudget {
    used: Cell<u64>,
    max: u64,
}

impl EvalBudget {
    pub fn new(max: u64) -> Self {
        Self {
            used: Cell::new(0),
            max,
        }
    }

    /// Reserve `n` evaluations or fail.
    pub fn charge(&self, n: u64) -> Result<()> {
        let used = self.used.get() + n;
        if used > self.max {
            return Err(Error::QuadratureBudgetExceeded {
                needed: used,
                budget: self.max,
            });
        }
        self.used.set(used);
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }
}

/// Nodes and weights of an n-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        let s = if x > 0.0 || n % 2 == 0 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Fills `out[l] = P_l(x)` for `l = 0..out.len()`.
pub fn legendre_table(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for l in 2..out.len() {
        let lf = l as f64;
        out[l] = ((2.0 * lf - 1.0) * x * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
    }
}

/// Fills `p[l] = P_l(x)` and `dp[l] = P_l'(x)` for `|x| < 1`.
pub fn legendre_table_with_derivative(x: f64, p: &mut [f64], dp: &mut [f64]) {
    legendre_table(x, p);
    if dp.is_empty() {
        return;
    }
    dp[0] = 0.0;
    for l in 1..dp.len() {
        // P'_l = l P_{l-1} + x P'_{l-1}
        dp[l] = l as f64 * p[l - 1] + x * dp[l - 1];
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn kronrod15(
    f: &mut impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    budget: &EvalBudget,
) -> Result<Estimate> {
    budget.charge(15)?;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x)?;
        let f2 = f(c + x)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * h;
    let res_abs = res_abs * h.abs();
    let res_asc = res_asc * h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Estimate { value, error: err })
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive G7/K15 integration over `[breaks[0], breaks[last]]`,
/// starting from the segments delimited by `breaks`.
pub fn adaptive(
    mut f: impl FnMut(f64) -> Result<f64>,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    budget: &EvalBudget,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let est = kronrod15(&mut f, w[0], w[1], budget)?;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                est,
            });
        }
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.est.value, e + s.est.error));
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Estimate { value, error });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => return Ok(Estimate { value, error }),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-13 * (1.0 + mid.abs()) {
            // Roundoff limit: the estimate cannot be improved further.
            return Ok(Estimate { value, error });
        }
        let left = kronrod15(&mut f, worst.a, mid, budget)?;
        let right = kronrod15(&mut f, mid, worst.b, budget)?;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            est: right,
        });
    }
}

/// Convenience wrapper around [`adaptive`] with a fresh budget.
pub fn integrate(
    f: impl FnMut(f64) -> Result<f64>,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let budget = EvalBudget::new(spec.max_evals);
    adaptive(f, breaks, spec.rel_tol, spec.abs_tol, &budget)
}

/// Nested adaptive integration of `f(x, y)` over `x` in `outer` breakpoints
/// and `y` in the breakpoints returned by `inner(x)`.  The inner integrals
/// use a tenth of the relative tolerance and share the evaluation budget.
pub fn adaptive_2d(
    f: impl Fn(f64, f64) -> f64,
    outer: &[f64],
    inner: impl Fn(f64) -> Vec<f64>,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let budget = EvalBudget::new(spec.max_evals);
    let inner_tol = 0.1 * spec.rel_tol;
    let line = |x: f64| -> Result<f64> {
        let breaks = inner(x);
        if breaks.len() < 2 {
            return Ok(0.0);
        }
        let e = adaptive(|y| Ok(f(x, y)), &breaks, inner_tol, spec.abs_tol, &budget)?;
        Ok(e.value)
    };
    adaptive(line, outer, spec.rel_tol, spec.abs_tol, &budget)
}

/// Upper incomplete gamma function `Gamma(s, x)` for `x > 0` and any real `s`,
/// from the Legendre continued fraction (modified Lentz).
pub fn upper_incomplete_gamma(s: f64, x: f64) -> f64 {
    assert!(x > 0.0, "upper incomplete gamma needs x > 0");
    if x < (s + 1.0).max(2.0) {
        // Continued fraction converges slowly here: integrate directly.
        let tail = upper_incomplete_gamma(s, (s + 1.0).max(2.0) + 1.0);
        let hi = (s + 1.0).max(2.0) + 1.0;
        let rule = GaussLegendre::new(40);
        let n_panels = 64;
        let mut acc = 0.0;
        for i in 0..n_panels {
            let a = x + (hi - x) * i as f64 / n_panels as f64;
            let b = x + (hi - x) * (i + 1) as f64 / n_panels as f64;
            acc += rule.integrate(a, b, |t| t.powf(s - 1.0) * (-t).exp());
        }
        return acc + tail;
    }
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + s * x.ln()).exp() * h
}

/// `\int_r^\infty c t^k e^{-a t} dt` for `a > 0`.
pub fn exp_power_tail(c: f64, k: f64, a: f64, r: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    c * upper_incomplete_gamma(k + 1.0, a * r) / a.powf(k + 1.0)
}

/// Pairwise (cascade) summation of `term(i)` for `i` in `0..n`.
pub fn pairwise_sum(n: usize, term: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 64 {
            let mut s = 0.0;
            for i in lo..hi {
                s += term(i);
            }
            return s;
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, term) + go(mid, hi, term)
    }
    if n == 0 {
        0.0
    } else {
        go(0, n, term)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..30 {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n = {n}, deg = {deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-10);
        let e = integrate(|x| Ok(1.0 / (1e-4 + x * x)), &[-1.0, 1.0], &spec).unwrap();
        let exact = 2.0 * (1.0 / 1e-4f64.sqrt()) * (1.0 / 1e-4f64.sqrt()).atan();
        assert!((e.value - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let spec = QuadratureSpec::default().with_max_evals(10);
        let err = integrate(|x| Ok(x.sin()), &[0.0, 1.0], &spec).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn nested_integral_of_gaussian_disk() {
        // \int\int_{x^2+y^2<1} e^{-x^2-y^2} = pi (1 - e^{-1})
        let spec = QuadratureSpec::default().with_rel_tol(1e-9);
        let e = adaptive_2d(
            |x, y| (-(x * x + y * y)).exp(),
            &[-1.0, 0.0, 1.0],
            |x| {
                let h = (1.0 - x * x).max(0.0).sqrt();
                vec![-h, h]
            },
            &spec,
        )
        .unwrap();
        let exact = std::f64::consts::PI * (1.0 - (-1.0f64).exp());
        assert!((e.value - exact).abs() < 1e-8);
    }

    #[test]
    fn incomplete_gamma_matches_quadrature() {
        for &(s, x) in &[(0.0, 60.0), (-2.0, 55.0), (1.5, 3.0), (3.0, 0.5), (-1.0, 30.0)] {
            let spec = QuadratureSpec::default().with_rel_tol(1e-12);
            let num = integrate(
                |t: f64| Ok(t.powf(s - 1.0) * (-t).exp()),
                &[x, x + 5.0, x + 20.0, x + 80.0],
                &spec,
            )
            .unwrap()
            .value;
            let got = upper_incomplete_gamma(s, x);
            assert!((got - num).abs() / num < 1e-9, "s = {s}, x = {x}: {got} vs {num}");
        }
        // Gamma(1, x) = e^{-x}
        assert!((upper_incomplete_gamma(1.0, 7.0) - (-7.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn legendre_derivative_table_matches_direct() {
        let mut p = [0.0; 8];
        let mut dp = [0.0; 8];
        legendre_table_with_derivative(0.3, &mut p, &mut dp);
        for l in 0..8 {
            let (pv, dv) = legendre_with_derivative(l, 0.3);
            assert!((p[l] - pv).abs() < 1e-14);
            assert!((dp[l] - dv).abs() < 1e-12, "l = {l}");
        }
    }

    proptest! {
        #[test]
        fn pairwise_sum_matches_naive(n in 0usize..5000, scale in 0.1f64..10.0) {
            let term = |i: usize| scale / (1.0 + i as f64);
            let naive: f64 = (0..n).map(term).sum();
            let pw = pairwise_sum(n, &term);
            prop_assert!((pw - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
        }
    }
}
