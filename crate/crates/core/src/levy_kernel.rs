//! Lévy density `μ(t)` of the subordinator, jump density `j(r)` of the
//! subordinate process, Lévy-system rates `h(y) = ∫ F(y,z) j(|y-z|) dz` and
//! the Kato-type integral `∫₀¹ F̃(s)/(Φ(s)s) ds`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::bernstein::{BernsteinSpec, Family, PowerPiece};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::quadrature::{
    gauss_kronrod_breaks, gauss_legendre, tanh_sinh_breaks, tanh_sinh_to_infinity, Node,
    QuadOptions,
};
use crate::report::{EstimateReport, Finiteness, Verdict};
use crate::stats::linear_fit;

/// `μ(t)`, the density of the subordinator's Lévy measure.
pub fn levy_measure_density(spec: &BernsteinSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("levy_measure_density", format!("t = {t} must be positive")));
    }
    Ok(spec.levy_density(t))
}

/// Surface area of the unit sphere in `ℝ^d` (2 for `d = 1`).
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

#[derive(Clone, Copy, Debug)]
struct KernelTerm {
    piece: PowerPiece,
    a: f64,
    log_pref: f64,
    full: bool,
}

/// Closed-form jump density of `X`, optionally restricted to subordinator
/// jumps with size in `[band_lo, band_hi)`.
#[derive(Clone, Debug)]
pub struct JumpKernel {
    d: usize,
    band_lo: f64,
    band_hi: f64,
    terms: Vec<KernelTerm>,
}

impl JumpKernel {
    pub fn new(spec: &BernsteinSpec, d: usize) -> Self {
        Self::band(spec, d, 0.0, f64::INFINITY)
    }

    /// Density of jumps driven by subordinator jumps `v ∈ [lo, hi)`.
    pub fn band(spec: &BernsteinSpec, d: usize, lo: f64, hi: f64) -> Self {
        let half_d = d as f64 / 2.0;
        let terms = spec
            .pieces()
            .iter()
            .map(|&piece| {
                let a = half_d - piece.power - 1.0;
                let log_pref = piece.coef.ln() - half_d * (4.0 * PI).ln() + ln_gamma(a) + a * 4f64.ln();
                let full = piece.lo.max(lo) == 0.0 && piece.hi.min(hi).is_infinite();
                KernelTerm {
                    piece,
                    a,
                    log_pref,
                    full,
                }
            })
            .collect();
        JumpKernel {
            d,
            band_lo: lo,
            band_hi: hi,
            terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `j(r)` for `r > 0`.
    #[inline]
    pub fn j(&self, r: f64) -> f64 {
        let lr = r.ln();
        let mut s = 0.0;
        for t in &self.terms {
            if t.full {
                s += (t.log_pref - 2.0 * t.a * lr).exp();
            } else {
                s += t.piece.heat_integral(self.d, r, self.band_lo, self.band_hi);
            }
        }
        s
    }
}

/// Isotropic stable constant `A(d, 2α)` in `j(r) = A·r^{-d-2α}`.
pub fn stable_jump_constant(d: usize, alpha: f64) -> f64 {
    let hd = d as f64 / 2.0;
    alpha * 4f64.powf(alpha) * gamma(hd + alpha) / (PI.powf(hd) * gamma(1.0 - alpha))
}

/// `j(r)` by adaptive quadrature of `∫ (4πt)^{-d/2} e^{-r²/4t} μ(t) dt` in
/// `u = ln t`.
pub fn jump_density_quadrature(
    spec: &BernsteinSpec,
    d: usize,
    r: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    if !(r > 0.0) || d == 0 {
        return Err(Error::domain("jump_density", format!("r = {r}, d = {d}")));
    }
    let half_d = d as f64 / 2.0;
    let x2 = r * r / 4.0;
    let a_min = spec
        .pieces()
        .iter()
        .map(|p| half_d - p.power - 1.0)
        .fold(f64::INFINITY, f64::min);
    let u_lo = (x2 / 720.0).ln();
    let u_hi = (4.0 * x2).ln() + 40.0 / a_min;
    let mut breaks = vec![u_lo];
    if let Family::Custom { table } = spec.family() {
        for t in &table.t {
            let u = t.ln();
            if u > u_lo && u < u_hi {
                breaks.push(u);
            }
        }
    }
    // Peak of the heat factor against t^{-1-α}
    let peak = (x2 / a_min.max(0.5)).ln();
    if peak > u_lo && peak < u_hi && !breaks.contains(&peak) {
        breaks.push(peak);
    }
    breaks.push(u_hi);
    breaks.sort_by(f64::total_cmp);
    let pref = (4.0 * PI).powf(-half_d);
    let q = gauss_kronrod_breaks(
        |u| {
            let t = u.exp();
            pref * (-x2 / t - half_d * u).exp() * spec.levy_density(t) * t
        },
        &breaks,
        &opts.with_abs_tol(0.0),
    )?;
    Ok(q.value)
}

/// `j(r)` by quadrature, cross-checked against the closed form when the
/// family admits one.
pub fn jump_density(spec: &BernsteinSpec, d: usize, r: f64) -> Result<f64> {
    let opts = QuadOptions::default();
    let q = jump_density_quadrature(spec, d, r, &opts)?;
    if spec.stable_components().is_some() {
        let exact = JumpKernel::new(spec, d).j(r);
        let rel = (q - exact).abs() / exact;
        if rel > 1e-6 {
            return Err(Error::Numeric {
                op: "jump_density",
                value: q,
                error: rel,
            });
        }
    }
    Ok(q)
}

/// Tabulated `j` on a radius grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpDensityTable {
    pub family: String,
    pub d: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub closed_form: bool,
}

impl JumpDensityTable {
    /// Builds the table, by closed form when `closed_form` is set and the
    /// family allows it, otherwise by quadrature.
    pub fn build(spec: &BernsteinSpec, d: usize, radii: &[f64], closed_form: bool) -> Result<Self> {
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.first().is_some_and(|r| *r <= 0.0) {
            return Err(Error::domain("jump_density_table", "radii must be positive and increasing"));
        }
        let closed_form = closed_form && spec.stable_components().is_some();
        let values: Vec<f64> = if closed_form {
            let k = JumpKernel::new(spec, d);
            radii.iter().map(|&r| k.j(r)).collect()
        } else {
            radii
                .iter()
                .map(|&r| jump_density_quadrature(spec, d, r, &QuadOptions::default()))
                .collect::<Result<_>>()?
        };
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Numeric {
                op: "jump_density_table",
                value: f64::NAN,
                error: f64::NAN,
            });
        }
        if values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Degenerate("jump density is not strictly decreasing".into()));
        }
        Ok(JumpDensityTable {
            family: spec.family_name().to_string(),
            d,
            radii: radii.to_vec(),
            values,
            closed_form,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,j,closed_form_flag\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(s, "{r:.17e},{v:.17e},{}", self.closed_form as u8);
        }
        s
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Sandwich ratio `j(r)·r^d·Φ(r)` over a grid in `(0, 1]`.
pub fn check_j_bounds(spec: &BernsteinSpec, d: usize, grid: &[f64]) -> Result<EstimateReport> {
    if grid.is_empty() {
        return Err(Error::domain("check_j_bounds", "empty grid"));
    }
    let k = JumpKernel::new(spec, d);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &r in grid {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::domain("check_j_bounds", format!("radius {r} outside (0,1]")));
        }
        let jr = if spec.stable_components().is_some() {
            k.j(r)
        } else {
            jump_density_quadrature(spec, d, r, &QuadOptions::default())?
        };
        let ratio = jr * r.powi(d as i32) * spec.phi_cap(r)?;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let spread = hi / lo;
    let c1 = hi.max(1.0 / lo);
    let ok = spread.is_finite() && lo > 0.0;
    Ok(EstimateReport::new("j_sandwich_spread", spread)
        .detail("ratio_min", lo)
        .detail("ratio_max", hi)
        .detail("c1_empirical", c1)
        .detail("grid_points", grid.len() as f64)
        .with_verdict(Verdict::from_bool(ok)))
}

/// A radial profile `F̃: [0,∞) → [0,1]` with `F̃(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    Zero,
    /// `Φ(s)^β ∧ 1`.
    PhiPower { beta: f64 },
    /// Piecewise linear through `(s, v)` points, `0` at `0`, constant beyond.
    Tabulated { s: Vec<f64>, v: Vec<f64> },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Zero => Ok(()),
            RadialProfile::PhiPower { beta } => {
                if *beta > 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain("radial_profile", format!("beta = {beta} must be positive")))
                }
            }
            RadialProfile::Tabulated { s, v } => {
                if s.len() != v.len() || s.is_empty() {
                    return Err(Error::domain("radial_profile", "s and v must match"));
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) || s[0] <= 0.0 {
                    return Err(Error::domain("radial_profile", "s must be positive, increasing"));
                }
                if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(Error::domain("radial_profile", "profile values must lie in [0,1]"));
                }
                Ok(())
            }
        }
    }

    #[inline]
    pub fn value(&self, spec: &BernsteinSpec, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            RadialProfile::Zero => 0.0,
            RadialProfile::PhiPower { beta } => spec.phi_cap0(s).powf(*beta).min(1.0),
            RadialProfile::Tabulated { s: xs, v } => {
                let i = xs.partition_point(|x| *x < s);
                if i == 0 {
                    v[0] * s / xs[0]
                } else if i == xs.len() {
                    v[v.len() - 1]
                } else {
                    let w = (s - xs[i - 1]) / (xs[i] - xs[i - 1]);
                    v[i - 1] + w * (v[i] - v[i - 1])
                }
            }
        }
    }

    /// Radii where the profile may fail to be smooth.
    pub fn breaks(&self, spec: &BernsteinSpec) -> Vec<f64> {
        match self {
            RadialProfile::Zero => vec![],
            // Φ(1) = 1
            RadialProfile::PhiPower { .. } => vec![spec.phi_cap_inv(1.0).unwrap_or(1.0)],
            RadialProfile::Tabulated { s, .. } => s.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatoResult {
    pub value: f64,
    /// Fitted exponent `p` of the integrand `~ s^p` near zero.
    pub exponent: f64,
    pub verdict: Finiteness,
}

/// `∫₀¹ F̃(s)/(Φ(s)s) ds` with a finiteness verdict from the local exponent
/// on `(1e-8, 1e-4)`.
pub fn kato_integral(spec: &BernsteinSpec, profile: &RadialProfile) -> Result<KatoResult> {
    profile.validate()?;
    if matches!(profile, RadialProfile::Zero) {
        return Ok(KatoResult {
            value: 0.0,
            exponent: f64::NAN,
            verdict: Finiteness::Finite,
        });
    }
    let g = |s: f64| profile.value(spec, s) / (spec.phi_cap0(s) * s);
    let xs: Vec<f64> = log_grid(1e-8, 1e-4, 9);
    let lx: Vec<f64> = xs.iter().map(|s| s.ln()).collect();
    let ly: Vec<f64> = xs.iter().map(|&s| g(s).max(1e-300).ln()).collect();
    let p = linear_fit(&lx, &ly).slope;
    if g(1e-8) > 0.0 && p <= -1.0 + 1e-6 {
        return Ok(KatoResult {
            value: f64::INFINITY,
            exponent: p,
            verdict: Finiteness::Divergent,
        });
    }
    let s0: f64 = 1e-8;
    let mut breaks: Vec<f64> = vec![s0.ln()];
    for b in profile.breaks(spec) {
        if b > s0 && b < 1.0 {
            breaks.push(b.ln());
        }
    }
    breaks.push(0.0);
    let body = gauss_kronrod_breaks(|u| g(u.exp()) * u.exp(), &breaks, &QuadOptions::default())?;
    let head = if g(s0) > 0.0 { g(s0) * s0 / (p + 1.0) } else { 0.0 };
    Ok(KatoResult {
        value: body.value + head,
        exponent: p,
        verdict: Finiteness::Finite,
    })
}

/// Fixed product rule for averaging over the unit sphere `S^{d-1}`, `d ≤ 3`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub dirs: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Rule whose weights sum to the sphere area; `order` controls the
    /// number of nodes for `d ≥ 2`.
    pub fn new(d: usize, order: usize) -> Result<Self> {
        let mut dirs = Vec::new();
        let mut weights = Vec::new();
        match d {
            1 => {
                dirs.push(Point::on_axis(1, 1.0));
                dirs.push(Point::on_axis(1, -1.0));
                weights.extend([1.0, 1.0]);
            }
            2 => {
                let m = 4 * order.max(1);
                for k in 0..m {
                    let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    dirs.push(Point::from_slice(&[th.cos(), th.sin()])?);
                    weights.push(2.0 * PI / m as f64);
                }
            }
            3 => {
                let n = order.max(1);
                let (xs, ws) = gauss_legendre(n);
                let m = 2 * n;
                for (c, w) in xs.iter().zip(&ws) {
                    let sn = (1.0 - c * c).sqrt();
                    for k in 0..m {
                        let ph = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                        dirs.push(Point::from_slice(&[sn * ph.cos(), sn * ph.sin(), *c])?);
                        weights.push(w * 2.0 * PI / m as f64);
                    }
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "angular quadrature implemented for d <= 3, got d = {d}"
                )))
            }
        }
        Ok(SphereRule { dirs, weights })
    }
}

/// A symmetric pair function `F(x, y)` seen by the Lévy-system quadrature.
pub trait PairFunction: Sync {
    fn value(&self, x: &Point, y: &Point) -> f64 {
        self.value_at(x, y, x.dist(y))
    }

    /// `F(x, y)` given the exact distance `|x - y|`, which cannot be
    /// recovered from `y` without cancellation when it is tiny.
    fn value_at(&self, x: &Point, y: &Point, dist: f64) -> f64;

    /// Distances `ρ` at which `ρ ↦ F(y, y + ρω)` may jump or kink.
    fn breaks(&self, _y: &Point) -> Vec<f64> {
        Vec::new()
    }

    /// A radius beyond which `F(y, ·)` vanishes, if any.
    fn support_radius(&self, _y: &Point) -> Option<f64> {
        None
    }
}

/// `h(y) = ∫ F(y,z) j(|y-z|) dz` in polar coordinates around `y`.
pub fn levy_system_rate<F: PairFunction + ?Sized>(
    kernel: &JumpKernel,
    f: &F,
    y: &Point,
    sphere: &SphereRule,
    opts: &QuadOptions,
) -> Result<f64> {
    let d = kernel.dim();
    if y.dim() != d {
        return Err(Error::domain("levy_system_rate", "point dimension mismatch"));
    }
    let radial = |rho: f64| -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let mut ang = 0.0;
        for (dir, w) in sphere.dirs.iter().zip(&sphere.weights) {
            let v = f.value_at(y, &y.offset(dir, rho), rho);
            if v != 0.0 {
                ang += w * v;
            }
        }
        if ang == 0.0 {
            return 0.0;
        }
        ang * kernel.j(rho) * rho.powi(d as i32 - 1)
    };
    let mut pts: Vec<f64> = f.breaks(y).into_iter().filter(|b| *b > 0.0 && b.is_finite()).collect();
    pts.push(0.0);
    let outer = match f.support_radius(y) {
        Some(r) => r,
        None => pts.iter().cloned().fold(1.0, f64::max),
    };
    pts.push(outer);
    pts.retain(|b| *b <= outer);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let inner = tanh_sinh_breaks(|n: Node| radial(n.x), &pts, opts)?;
    let mut total = inner.value;
    if f.support_radius(y).is_none() {
        let tail = tanh_sinh_to_infinity(|rho, _| radial(rho), outer, outer, opts)?;
        total += tail.value;
    }
    Ok(total)
}

/// `c = ∫_{ℝ^d} F̃(|y|) j(|y|) dy` for a radial profile.
pub fn radial_rate(
    spec: &BernsteinSpec,
    kernel: &JumpKernel,
    profile: &RadialProfile,
    opts: &QuadOptions,
) -> Result<f64> {
    if matches!(profile, RadialProfile::Zero) {
        return Ok(0.0);
    }
    let d = kernel.dim();
    let g = |rho: f64| profile.value(spec, rho) * kernel.j(rho) * rho.powi(d as i32 - 1);
    let mut pts = vec![0.0];
    pts.extend(profile.breaks(spec).into_iter().filter(|b| *b > 0.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let outer = *pts.last().unwrap();
    let outer = if outer > 0.0 { outer } else { 1.0 };
    if pts.len() == 1 {
        pts.push(outer);
    }
    let inner = tanh_sinh_breaks(|n: Node| g(n.x), &pts, opts)?;
    let tail = tanh_sinh_to_infinity(|rho, _| g(rho), outer, outer, opts)?;
    Ok(sphere_area(d) * (inner.value + tail.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stable_levy_density_half() {
        let s = BernsteinSpec::stable(0.5).unwrap();
        assert_relative_eq!(
            levy_measure_density(&s, 1.0).unwrap(),
            0.5 / PI.sqrt(),
            max_relative = 1e-14
        );
        assert!(levy_measure_density(&s, 0.0).is_err());
    }

    #[test]
    fn stable_constant_d1() {
        // α·4^α·Γ(0.5+α)/(√π·Γ(1-α)) at α = 0.4, frozen from an independent evaluation
        assert_relative_eq!(stable_jump_constant(1, 0.4), 0.281_958_452_999_990_4, max_relative = 1e-13);
        let s = BernsteinSpec::stable(0.4).unwrap();
        let k = JumpKernel::new(&s, 1);
        assert_relative_eq!(k.j(1.0), stable_jump_constant(1, 0.4), max_relative = 1e-13);
        assert_relative_eq!(k.j(2.0) / k.j(1.0), 2f64.powf(-1.8), max_relative = 1e-13);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        for &r in &[1e-3, 0.1, 1.0, 37.0, 1e3] {
            let q = jump_density(&s, 1, r).unwrap();
            let c = JumpKernel::new(&s, 1).j(r);
            assert_relative_eq!(q, c, max_relative = 1e-8);
        }
    }

    #[test]
    fn band_kernels_partition_full_kernel() {
        let s = BernsteinSpec::mixture(&[(0.5, 0.3), (0.5, 0.45)]).unwrap();
        let full = JumpKernel::new(&s, 2);
        let small = JumpKernel::band(&s, 2, 0.0, 1e-3);
        let large = JumpKernel::band(&s, 2, 1e-3, f64::INFINITY);
        for &r in &[1e-3, 0.05, 0.3, 2.0] {
            assert_relative_eq!(small.j(r) + large.j(r), full.j(r), max_relative = 1e-11);
        }
    }

    #[test]
    fn kato_examples() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let k = kato_integral(&s, &RadialProfile::PhiPower { beta: 1.5 }).unwrap();
        assert_eq!(k.verdict, Finiteness::Finite);
        assert_relative_eq!(k.value, 2.5, max_relative = 1e-8);
        let z = kato_integral(&s, &RadialProfile::Zero).unwrap();
        assert_eq!(z.value, 0.0);
        let b = kato_integral(&s, &RadialProfile::PhiPower { beta: 1.0 }).unwrap();
        assert_eq!(b.verdict, Finiteness::Divergent);
    }

    #[test]
    fn radial_rate_closed_form() {
        // 2A[∫₀¹ ρ^{1.2-1.8} dρ + ∫₁^∞ ρ^{-1.8} dρ] = 2A(2.5 + 1.25)
        let s = BernsteinSpec::stable(0.4).unwrap();
        let k = JumpKernel::new(&s, 1);
        let c = radial_rate(&s, &k, &RadialProfile::PhiPower { beta: 1.5 }, &QuadOptions::default())
            .unwrap();
        assert_relative_eq!(c, 2.0 * stable_jump_constant(1, 0.4) * 3.75, max_relative = 1e-9);
    }

    struct Radial(BernsteinSpec);
    impl PairFunction for Radial {
        fn value_at(&self, _x: &Point, _y: &Point, dist: f64) -> f64 {
            self.0.phi_cap0(dist).powf(1.5).min(1.0)
        }
        fn breaks(&self, _y: &Point) -> Vec<f64> {
            vec![1.0]
        }
    }

    #[test]
    fn rate_of_radial_functional_is_constant() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        for d in [1usize, 3] {
            let k = JumpKernel::new(&s, d);
            let rule = SphereRule::new(d, 6).unwrap();
            let f = Radial(s.clone());
            let c = radial_rate(&s, &k, &RadialProfile::PhiPower { beta: 1.5 }, &QuadOptions::default())
                .unwrap();
            for y in [0.0, 3.0, -40.0] {
                let h = levy_system_rate(&k, &f, &Point::on_axis(d, y), &rule, &QuadOptions::default())
                    .unwrap();
                assert!((h / c - 1.0).abs() < 1e-8, "d={d} y={y} h={h} c={c}");
            }
        }
    }

    #[test]
    fn table_csv_and_monotonicity() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let t = JumpDensityTable::build(&s, 1, &log_grid(0.1, 10.0, 5), true).unwrap();
        assert!(t.closed_form);
        assert!(t.to_csv().starts_with("r,j,closed_form_flag\n"));
        assert_eq!(t.to_csv().lines().count(), 6);
    }

    #[test]
    fn j_bounds_stable_constant() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let r = check_j_bounds(&s, 1, &log_grid(1e-4, 1.0, 20)).unwrap();
        assert_relative_eq!(r.estimate, 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.details["c1_empirical"], 1.0 / 0.281_958_452_999_990_4, max_relative = 1e-13);
        let one = check_j_bounds(&s, 1, &[1.0]).unwrap();
        assert_eq!(one.estimate, 1.0);
        assert!(check_j_bounds(&s, 1, &[2.0]).is_err());
    }
}
