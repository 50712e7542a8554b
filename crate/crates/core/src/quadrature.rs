//! One-dimensional quadrature.
//!
//! Two rules are provided:
//!
//! * [`gauss_kronrod`]: globally adaptive 21-point Gauss–Kronrod bisection
//!   (QUADPACK `qag` style). Used for smooth integrands over long ranges,
//!   typically after a logarithmic change of variables.
//! * [`tanh_sinh`]: double-exponential quadrature for integrands with
//!   algebraic endpoint singularities. The integrand receives a [`Node`]
//!   carrying the exact distances to both endpoints so that singular factors
//!   such as `|y - z|^{-0.6}` can be evaluated without cancellation.
//!
//! Interior singularities are handled by splitting at breakpoints
//! ([`tanh_sinh_breaks`]).

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Tolerances and budget shared by the quadrature rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of integrand evaluations.
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_evals: 10_000_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    #[inline]
    fn accepts(&self, value: f64, error: f64) -> bool {
        error <= self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

// 21-point Kronrod abscissae and weights, with the embedded 10-point Gauss
// weights (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_138_316,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0_f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let (value, error) = gk21(&mut f, a, b);
    let mut evals = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    while !opts.accepts(total, total_err) {
        if evals + 42 > opts.max_evals {
            return Err(Error::Numeric {
                op: "gauss_kronrod",
                value: total,
                error: total_err,
            });
        }
        let seg = heap.pop().expect("heap never empties");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval cannot be split further in floating point.
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk21(&mut f, seg.a, mid);
        let (v2, e2) = gk21(&mut f, mid, seg.b);
        evals += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(Error::Numeric {
            op: "gauss_kronrod",
            value,
            error,
        });
    }
    Ok(QuadResult {
        value,
        error,
        evals,
    })
}

/// Gauss–Kronrod over consecutive intervals of `points` (sorted ascending).
pub fn gauss_kronrod_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        evals: 0,
    };
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = gauss_kronrod(&mut f, w[0], w[1], opts)?;
        out.value += r.value;
        out.error += r.error;
        out.evals += r.evals;
    }
    Ok(out)
}

/// An abscissa of the double-exponential rule.
///
/// `dl` and `dr` are the distances to the left and right endpoint, each
/// accurate to full relative precision even when tiny.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub x: f64,
    pub dl: f64,
    pub dr: f64,
}

const DE_T_MAX: f64 = 5.0;
const DE_MAX_LEVEL: usize = 10;

#[inline]
fn de_node(a: f64, b: f64, t: f64) -> Option<(Node, f64)> {
    let len = b - a;
    let s = std::f64::consts::PI * t.sinh();
    // logistic(s) and logistic(-s)
    let dl = len / (1.0 + (-s).exp());
    let dr = len / (1.0 + s.exp());
    if dl <= 0.0 || dr <= 0.0 {
        return None;
    }
    let w = dl * dr / len * std::f64::consts::PI * t.cosh();
    if w == 0.0 || !w.is_finite() {
        return None;
    }
    let x = if dl <= dr { a + dl } else { b - dr };
    Some((Node { x, dl, dr }, w))
}

/// Tanh-sinh (double-exponential) quadrature of `f` over `[a, b]`.
///
/// Suited to integrands that are analytic inside `(a, b)` and may have
/// integrable algebraic singularities at the endpoints.
pub fn tanh_sinh<F: FnMut(Node) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if b <= a {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evals: 0,
        });
    }
    let mut evals = 0usize;
    let mut eval_at = |t: f64, evals: &mut usize| -> f64 {
        match de_node(a, b, t) {
            Some((node, w)) => {
                *evals += 1;
                let v = f(node);
                if v == 0.0 {
                    0.0
                } else {
                    w * v
                }
            }
            None => 0.0,
        }
    };

    // Level 0 with h = 1/2 over the full range; afterwards the range is
    // trimmed to where terms are non-negligible.
    let h0 = 0.5;
    let kmax = (DE_T_MAX / h0) as i64;
    let mut terms = Vec::with_capacity((2 * kmax + 1) as usize);
    for k in -kmax..=kmax {
        terms.push(eval_at(k as f64 * h0, &mut evals));
    }
    let abs_sum: f64 = terms.iter().map(|v| v.abs()).sum();
    let negligible = 1e-18 * abs_sum;
    let first = terms.iter().position(|v| v.abs() > negligible);
    let last = terms.iter().rposition(|v| v.abs() > negligible);
    let (t_lo, t_hi) = match (first, last) {
        (Some(i), Some(j)) => (
            ((i as i64 - kmax - 1) as f64 * h0).max(-DE_T_MAX),
            ((j as i64 - kmax + 1) as f64 * h0).min(DE_T_MAX),
        ),
        _ => {
            return Ok(QuadResult {
                value: 0.0,
                error: 0.0,
                evals,
            })
        }
    };
    let mut sum: f64 = terms.iter().sum();
    let mut estimate = sum * h0;
    let mut h = h0;
    let mut last_diff = f64::INFINITY;
    for level in 1..=DE_MAX_LEVEL {
        h *= 0.5;
        let mut t = t_lo + h;
        // Odd multiples of h in [t_lo, t_hi] (t_lo is a multiple of 2h).
        let t_lo_k = (t_lo / h).round() as i64;
        let t_hi_k = (t_hi / h).round() as i64;
        let mut k = t_lo_k + 1;
        if k.rem_euclid(2) == 0 {
            k += 1;
        }
        while k <= t_hi_k {
            t = k as f64 * h;
            sum += eval_at(t, &mut evals);
            k += 2;
        }
        let _ = t;
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= 3 && opts.accepts(estimate, diff) {
            return Ok(QuadResult {
                value: estimate,
                error: diff,
                evals,
            });
        }
        // Double-exponential convergence is quadratic; a stalled difference
        // means rounding noise has been reached.
        if level >= 5 && diff >= last_diff && opts.accepts(estimate, 10.0 * diff) {
            return Ok(QuadResult {
                value: estimate,
                error: diff,
                evals,
            });
        }
        last_diff = diff;
        if evals > opts.max_evals {
            break;
        }
    }
    if !estimate.is_finite() || !opts.accepts(estimate, last_diff.min(1e300) * 1e-3) {
        return Err(Error::Numeric {
            op: "tanh_sinh",
            value: estimate,
            error: last_diff,
        });
    }
    Ok(QuadResult {
        value: estimate,
        error: last_diff,
        evals,
    })
}

/// Tanh-sinh quadrature over consecutive intervals of `points`.
///
/// Every breakpoint becomes an endpoint, so singularities located at the
/// breakpoints are handled with full accuracy.
pub fn tanh_sinh_breaks<F: FnMut(Node) -> f64>(
    mut f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        evals: 0,
    };
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = tanh_sinh(&mut f, w[0], w[1], opts)?;
        out.value += r.value;
        out.error += r.error;
        out.evals += r.evals;
    }
    Ok(out)
}

/// `∫_a^∞ f(x) dx` through `x = a + scale * u / (1 - u)`.
///
/// `f` receives the point `x` and its distance `x - a` (exact near `a`).
pub fn tanh_sinh_to_infinity<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    tanh_sinh(
        |n: Node| {
            // u = dl, 1 - u = dr on [0, 1]
            let off = scale * n.dl / n.dr;
            if !off.is_finite() {
                return 0.0;
            }
            let v = f(a + off, off);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (n.dr * n.dr)
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gk_polynomial_and_exponential() {
        let o = QuadOptions::default();
        let r = gauss_kronrod(|x| x * x, 0.0, 3.0, &o).unwrap();
        assert_relative_eq!(r.value, 9.0, max_relative = 1e-13);
        let r = gauss_kronrod(|x| (-x).exp(), 0.0, 50.0, &o).unwrap();
        assert_relative_eq!(r.value, 1.0 - (-50.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn gk_budget_exhaustion_reports_partial_value() {
        let o = QuadOptions {
            rel_tol: 1e-15,
            abs_tol: 0.0,
            max_evals: 50,
        };
        let err = gauss_kronrod(|x: f64| x.abs().powf(-0.5), -1.0, 1.0, &o).unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));
    }

    #[test]
    fn de_endpoint_singularities() {
        let o = QuadOptions::default().with_rel_tol(1e-12);
        // ∫_0^1 x^{-0.6} dx = 2.5
        let r = tanh_sinh(|n| n.dl.powf(-0.6), 0.0, 1.0, &o).unwrap();
        assert_relative_eq!(r.value, 2.5, max_relative = 1e-11);
        // ∫_0^1 x^{-0.6}(1-x)^{-0.2} dx = B(0.4, 0.8)
        let b = statrs::function::beta::beta(0.4, 0.8);
        let r = tanh_sinh(|n| n.dl.powf(-0.6) * n.dr.powf(-0.2), 0.0, 1.0, &o).unwrap();
        assert_relative_eq!(r.value, b, max_relative = 1e-10);
    }

    #[test]
    fn de_interior_singularity_via_breaks() {
        let o = QuadOptions::default();
        // ∫_{-1}^{2} |x|^{-0.5} dx = 2 + 2√2
        let r = tanh_sinh_breaks(
            |n: Node| {
                let d = if n.x < 0.0 { n.dr } else { n.dl };
                d.powf(-0.5)
            },
            &[-1.0, 0.0, 2.0],
            &o,
        )
        .unwrap();
        assert_relative_eq!(r.value, 2.0 + 2.0 * 2f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn de_semi_infinite_power_tail() {
        let o = QuadOptions::default();
        // ∫_1^∞ x^{-1.8} dx = 1.25
        let r = tanh_sinh_to_infinity(|x, _| x.powf(-1.8), 1.0, 1.0, &o).unwrap();
        assert_relative_eq!(r.value, 1.25, max_relative = 1e-10);
    }

    #[test]
    fn legendre_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(s, 2.0 / 13.0, max_relative = 1e-13);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }
}
