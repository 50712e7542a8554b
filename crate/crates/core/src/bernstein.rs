//! Complete Bernstein functions `φ`, the scale function `Φ(s) = 1/φ(s⁻²)`,
//! the rescaled family `φ^R(s) = φ(R⁻²s)/φ(R⁻²)` and the weak global scaling
//! check `a₁λ^δ₁ ≤ φ(λx)/φ(x) ≤ a₂λ^δ₂`.
//!
//! Every family is normalized so that `φ(1) = 1`. Internally each Lévy
//! measure is a finite sum of power-law pieces `c·t^p` on intervals, which
//! gives closed forms for tail masses, truncated moments, inverse-CDF
//! sampling and the subordination integral.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod, tanh_sinh, tanh_sinh_to_infinity, QuadOptions};

/// One term `weight·λ^exponent` of a mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureTerm {
    pub weight: f64,
    pub exponent: f64,
}

/// Tabulated Lévy density, interpolated log-log linearly and extended by the
/// end-segment power laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTable {
    pub t: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Stable { alpha: f64 },
    Mixture { terms: Vec<MixtureTerm> },
    Custom { table: LevyTable },
}

/// Lévy density `coef·t^power` on `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerPiece {
    pub lo: f64,
    pub hi: f64,
    pub coef: f64,
    pub power: f64,
}

/// `∫_a^b t^{q-1} dt`, allowing `a = 0` when `q > 0` and `b = ∞` when `q < 0`.
fn power_integral(a: f64, b: f64, q: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if q == 0.0 {
        return (b / a).ln();
    }
    let fb = if b.is_infinite() { 0.0 } else { b.powf(q) };
    let fa = if a == 0.0 { 0.0 } else { a.powf(q) };
    (fb - fa) / q
}

impl PowerPiece {
    #[inline]
    pub fn density(&self, t: f64) -> f64 {
        if t >= self.lo && t < self.hi {
            self.coef * t.powf(self.power)
        } else {
            0.0
        }
    }

    /// `∫_{t ≥ eps} μ(dt)` restricted to this piece.
    pub fn mass_above(&self, eps: f64) -> f64 {
        self.coef * power_integral(self.lo.max(eps), self.hi, self.power + 1.0)
    }

    /// `∫_{t < eps} t μ(dt)` restricted to this piece.
    pub fn moment_below(&self, eps: f64) -> f64 {
        self.coef * power_integral(self.lo, self.hi.min(eps), self.power + 2.0)
    }

    /// Inverse CDF of the piece restricted to `[max(lo, eps), hi)`.
    pub fn sample_above(&self, eps: f64, u: f64) -> f64 {
        let a = self.lo.max(eps);
        let q = self.power + 1.0;
        if q == 0.0 {
            return a * (self.hi / a).powf(u);
        }
        if self.hi.is_infinite() {
            // q < 0: survival (t/a)^q
            return a * (1.0 - u).powf(1.0 / q);
        }
        let (fa, fb) = (a.powf(q), self.hi.powf(q));
        (fa + u * (fb - fa)).powf(1.0 / q)
    }

    /// `∫ (4πt)^{-d/2} e^{-r²/4t} μ(dt)` over the piece intersected with
    /// `[band_lo, band_hi)`.
    pub fn heat_integral(&self, d: usize, r: f64, band_lo: f64, band_hi: f64) -> f64 {
        let lo = self.lo.max(band_lo);
        let hi = self.hi.min(band_hi);
        if hi <= lo {
            return 0.0;
        }
        let half_d = d as f64 / 2.0;
        let a = half_d - self.power - 1.0;
        let x2 = r * r / 4.0;
        // s = r²/4t maps [lo, hi) to (x2/hi, x2/lo]
        let s_small = if hi.is_infinite() { 0.0 } else { x2 / hi };
        let s_big = if lo == 0.0 { f64::INFINITY } else { x2 / lo };
        let mass = if s_small == 0.0 && s_big.is_infinite() {
            1.0
        } else if s_small > a {
            let qb = if s_big.is_infinite() { 0.0 } else { gamma_ur(a, s_big) };
            gamma_ur(a, s_small) - qb
        } else {
            let pb = if s_big.is_infinite() { 1.0 } else { gamma_lr(a, s_big) };
            let ps = if s_small == 0.0 { 0.0 } else { gamma_lr(a, s_small) };
            pb - ps
        };
        if mass <= 0.0 {
            return 0.0;
        }
        let log_pref = self.coef.ln() - half_d * (4.0 * std::f64::consts::PI).ln() - a * x2.ln()
            + statrs::function::gamma::ln_gamma(a);
        log_pref.exp() * mass
    }

    /// `∫ (1 - e^{-λt}) μ(dt)` over the piece.
    fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        let q = self.power + 1.0;
        if self.lo == 0.0 && self.hi.is_infinite() {
            // -Γ(q) λ^{-q}, valid for q in (-1, 0)
            return Ok(-self.coef * gamma(q) * lambda.powf(-q));
        }
        let opts = QuadOptions::default().with_rel_tol(1e-12).with_abs_tol(0.0);
        let c = self.coef;
        let p = self.power;
        if self.lo == 0.0 {
            let r = tanh_sinh(
                |n| -(-lambda * n.dl).exp_m1() * c * n.dl.powf(p),
                0.0,
                self.hi,
                &opts,
            )?;
            return Ok(r.value);
        }
        if self.hi.is_infinite() {
            let lo = self.lo;
            let r = tanh_sinh_to_infinity(
                |t, _| -(-lambda * t).exp_m1() * c * t.powf(p),
                lo,
                lo,
                &opts,
            )?;
            return Ok(r.value);
        }
        let r = gauss_kronrod(
            |u| {
                let t = u.exp();
                -(-lambda * t).exp_m1() * c * t.powf(p + 1.0)
            },
            self.lo.ln(),
            self.hi.ln(),
            &opts,
        )?;
        Ok(r.value)
    }
}

/// A normalized complete Bernstein function with declared scaling constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct BernsteinSpec {
    family: Family,
    pub a1: f64,
    pub a2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pieces: Vec<PowerPiece>,
}

/// Serialized form of [`BernsteinSpec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mixture_terms: Option<Vec<MixtureTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levy_table: Option<LevyTable>,
    a1: f64,
    a2: f64,
    delta1: f64,
    delta2: f64,
}

impl TryFrom<RawSpec> for BernsteinSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let family = match raw.family.as_str() {
            "stable" => {
                if raw.mixture_terms.is_some() || raw.levy_table.is_some() {
                    return Err(Error::Config("stable family takes only `alpha`".into()));
                }
                Family::Stable {
                    alpha: raw
                        .alpha
                        .ok_or_else(|| Error::Config("stable family requires `alpha`".into()))?,
                }
            }
            "mixture" => {
                if raw.alpha.is_some() || raw.levy_table.is_some() {
                    return Err(Error::Config("mixture family takes only `mixture_terms`".into()));
                }
                Family::Mixture {
                    terms: raw.mixture_terms.ok_or_else(|| {
                        Error::Config("mixture family requires `mixture_terms`".into())
                    })?,
                }
            }
            "custom" => {
                if raw.alpha.is_some() || raw.mixture_terms.is_some() {
                    return Err(Error::Config("custom family takes only `levy_table`".into()));
                }
                Family::Custom {
                    table: raw.levy_table.ok_or_else(|| {
                        Error::Config("custom family requires `levy_table`".into())
                    })?,
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown family `{other}` (expected stable, mixture or custom)"
                )))
            }
        };
        BernsteinSpec::new(family, raw.a1, raw.a2, raw.delta1, raw.delta2)
    }
}

impl From<BernsteinSpec> for RawSpec {
    fn from(spec: BernsteinSpec) -> Self {
        let mut raw = RawSpec {
            family: String::new(),
            alpha: None,
            mixture_terms: None,
            levy_table: None,
            a1: spec.a1,
            a2: spec.a2,
            delta1: spec.delta1,
            delta2: spec.delta2,
        };
        match spec.family {
            Family::Stable { alpha } => {
                raw.family = "stable".into();
                raw.alpha = Some(alpha);
            }
            Family::Mixture { terms } => {
                raw.family = "mixture".into();
                raw.mixture_terms = Some(terms);
            }
            Family::Custom { table } => {
                raw.family = "custom".into();
                raw.levy_table = Some(table);
            }
        }
        raw
    }
}

fn check_index(op: &'static str, a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(op, format!("index {a} not in (0,1)")));
    }
    Ok(())
}

fn stable_coef(alpha: f64) -> f64 {
    alpha / gamma(1.0 - alpha)
}

fn custom_pieces(table: &LevyTable) -> Result<Vec<PowerPiece>> {
    let (t, mu) = (&table.t, &table.mu);
    if t.len() < 2 || t.len() != mu.len() {
        return Err(Error::Construction(
            "levy_table needs at least two (t, mu) points of equal length".into(),
        ));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) || t[0] <= 0.0 || !t[t.len() - 1].is_finite() {
        return Err(Error::Construction(
            "levy_table times must be positive, finite and strictly increasing".into(),
        ));
    }
    if mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::Construction("levy_table densities must be positive".into()));
    }
    let n = t.len();
    let mut pieces = Vec::with_capacity(n + 1);
    let slope = |k: usize| (mu[k + 1] / mu[k]).ln() / (t[k + 1] / t[k]).ln();
    let head = slope(0);
    if head <= -2.0 {
        return Err(Error::Construction(format!(
            "density exponent {head} near 0 is not integrable against min(1,t)"
        )));
    }
    pieces.push(PowerPiece {
        lo: 0.0,
        hi: t[0],
        coef: mu[0] * t[0].powf(-head),
        power: head,
    });
    for k in 0..n - 1 {
        let p = slope(k);
        pieces.push(PowerPiece {
            lo: t[k],
            hi: t[k + 1],
            coef: mu[k] * t[k].powf(-p),
            power: p,
        });
    }
    let tail = slope(n - 2);
    if tail >= -1.0 {
        return Err(Error::Construction(format!(
            "density exponent {tail} at infinity leaves infinite tail mass"
        )));
    }
    pieces.push(PowerPiece {
        lo: t[n - 1],
        hi: f64::INFINITY,
        coef: mu[n - 1] * t[n - 1].powf(-tail),
        power: tail,
    });
    Ok(pieces)
}

impl BernsteinSpec {
    /// Builds and normalizes a spec; mixture weights and tabulated densities
    /// are divided by the raw `φ(1)`.
    pub fn new(family: Family, a1: f64, a2: f64, delta1: f64, delta2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(Error::Config(format!("a1={a1}, a2={a2} must be positive")));
        }
        if !(delta1 > 0.0 && delta1 <= delta2 && delta2 < 1.0) {
            return Err(Error::Config(format!(
                "need 0 < delta1 <= delta2 < 1, got delta1={delta1}, delta2={delta2}"
            )));
        }
        let (family, pieces) = match family {
            Family::Stable { alpha } => {
                check_index("stable", alpha)?;
                let piece = PowerPiece {
                    lo: 0.0,
                    hi: f64::INFINITY,
                    coef: stable_coef(alpha),
                    power: -1.0 - alpha,
                };
                (Family::Stable { alpha }, vec![piece])
            }
            Family::Mixture { terms } => {
                if terms.is_empty() {
                    return Err(Error::Construction("mixture needs at least one term".into()));
                }
                for t in &terms {
                    check_index("mixture", t.exponent)?;
                    if !(t.weight > 0.0 && t.weight.is_finite()) {
                        return Err(Error::Construction(format!(
                            "mixture weight {} must be positive",
                            t.weight
                        )));
                    }
                }
                let total: f64 = terms.iter().map(|t| t.weight).sum();
                let terms: Vec<MixtureTerm> = terms
                    .iter()
                    .map(|t| MixtureTerm {
                        weight: t.weight / total,
                        exponent: t.exponent,
                    })
                    .collect();
                let pieces = terms
                    .iter()
                    .map(|t| PowerPiece {
                        lo: 0.0,
                        hi: f64::INFINITY,
                        coef: t.weight * stable_coef(t.exponent),
                        power: -1.0 - t.exponent,
                    })
                    .collect();
                (Family::Mixture { terms }, pieces)
            }
            Family::Custom { table } => {
                let mut pieces = custom_pieces(&table)?;
                let mut raw = 0.0;
                for p in &pieces {
                    raw += p.laplace_exponent(1.0)?;
                }
                for p in &mut pieces {
                    p.coef /= raw;
                }
                let table = LevyTable {
                    t: table.t.clone(),
                    mu: table.mu.iter().map(|m| m / raw).collect(),
                };
                (Family::Custom { table }, pieces)
            }
        };
        let spec = BernsteinSpec {
            family,
            a1,
            a2,
            delta1,
            delta2,
            pieces,
        };
        if matches!(spec.family, Family::Custom { .. }) {
            spec.shape_check()?;
        }
        Ok(spec)
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(Family::Stable { alpha }, 1.0, 1.0, alpha, alpha)
    }

    /// Mixture `Σ wᵢ λ^αᵢ` with scaling constants `a₁ = a₂ = 1`,
    /// `δ₁ = min αᵢ`, `δ₂ = max αᵢ`.
    pub fn mixture(terms: &[(f64, f64)]) -> Result<Self> {
        let lo = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
        let hi = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        let terms = terms
            .iter()
            .map(|&(weight, exponent)| MixtureTerm { weight, exponent })
            .collect();
        Self::new(Family::Mixture { terms }, 1.0, 1.0, lo, hi)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Stable { .. } => "stable",
            Family::Mixture { .. } => "mixture",
            Family::Custom { .. } => "custom",
        }
    }

    pub fn stable_alpha(&self) -> Option<f64> {
        match self.family {
            Family::Stable { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// `(weight, index)` pairs for families that are sums of stable powers.
    pub fn stable_components(&self) -> Option<Vec<(f64, f64)>> {
        match &self.family {
            Family::Stable { alpha } => Some(vec![(1.0, *alpha)]),
            Family::Mixture { terms } => Some(terms.iter().map(|t| (t.weight, t.exponent)).collect()),
            Family::Custom { .. } => None,
        }
    }

    pub fn pieces(&self) -> &[PowerPiece] {
        &self.pieces
    }

    /// Smallest stable index among the components, or the head exponent of a
    /// tabulated density.
    pub fn min_index(&self) -> f64 {
        match &self.family {
            Family::Stable { alpha } => *alpha,
            Family::Mixture { terms } => terms.iter().map(|t| t.exponent).fold(1.0, f64::min),
            Family::Custom { .. } => (-1.0 - self.pieces[self.pieces.len() - 1].power).max(1e-3),
        }
    }

    /// `φ(λ)`.
    pub fn phi(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::domain("phi", format!("lambda = {lambda} must be positive")));
        }
        Ok(match &self.family {
            Family::Stable { alpha } => lambda.powf(*alpha),
            Family::Mixture { terms } => terms.iter().map(|t| t.weight * lambda.powf(t.exponent)).sum(),
            Family::Custom { .. } => {
                let mut s = 0.0;
                for p in &self.pieces {
                    s += p.laplace_exponent(lambda)?;
                }
                s
            }
        })
    }

    /// `Φ(s) = 1/φ(s⁻²)`.
    pub fn phi_cap(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::domain("phi_cap", format!("s = {s} must be positive")));
        }
        if let Family::Stable { alpha } = self.family {
            return Ok(s.powf(2.0 * alpha));
        }
        Ok(1.0 / self.phi(s.powi(-2))?)
    }

    /// `Φ(s)` with `Φ(0) = 0`, panicking only on internal quadrature failure.
    #[inline]
    pub fn phi_cap0(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Stable { alpha } => s.powf(2.0 * alpha),
            Family::Mixture { terms } => {
                let l = s.powi(-2);
                1.0 / terms.iter().map(|t| t.weight * l.powf(t.exponent)).sum::<f64>()
            }
            Family::Custom { .. } => self.phi_cap(s).expect("custom Laplace exponent"),
        }
    }

    /// `Φ⁻¹(v)` by bisection on `ln s` (closed form for the stable family).
    pub fn phi_cap_inv(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::domain("phi_cap_inv", format!("value {v} must be positive")));
        }
        if let Family::Stable { alpha } = self.family {
            return Ok(v.powf(1.0 / (2.0 * alpha)));
        }
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        // Expand a bracket in ln s.
        let mut k = 0;
        while self.phi_cap(lo.exp())? > v {
            lo -= 4.0;
            k += 1;
            if k > 200 {
                return Err(Error::Numeric {
                    op: "phi_cap_inv",
                    value: lo.exp(),
                    error: self.phi_cap(lo.exp())? - v,
                });
            }
        }
        while self.phi_cap(hi.exp())? < v {
            hi += 4.0;
            k += 1;
            if k > 200 {
                return Err(Error::Numeric {
                    op: "phi_cap_inv",
                    value: hi.exp(),
                    error: v - self.phi_cap(hi.exp())?,
                });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.phi_cap(mid.exp())? < v {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + lo.abs()) {
                break;
            }
        }
        let s = (0.5 * (lo + hi)).exp();
        let resid = (self.phi_cap(s)? - v).abs() / v;
        if resid > 1e-9 {
            return Err(Error::Numeric {
                op: "phi_cap_inv",
                value: s,
                error: resid,
            });
        }
        Ok(s)
    }

    /// Spec of `φ^R(s) = φ(R⁻²s)/φ(R⁻²)` with the same scaling constants.
    pub fn rescale(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::domain("rescale", format!("R = {r} must be positive")));
        }
        if r == 1.0 {
            return Ok(self.clone());
        }
        let l = r.powi(-2);
        let norm = self.phi(l)?;
        let family = match &self.family {
            Family::Stable { alpha } => Family::Stable { alpha: *alpha },
            Family::Mixture { terms } => Family::Mixture {
                terms: terms
                    .iter()
                    .map(|t| MixtureTerm {
                        weight: t.weight * l.powf(t.exponent) / norm,
                        exponent: t.exponent,
                    })
                    .collect(),
            },
            // μ^R(t) = R² μ(R² t) / φ(R⁻²)
            Family::Custom { table } => Family::Custom {
                table: LevyTable {
                    t: table.t.iter().map(|t| t * l).collect(),
                    mu: table.mu.iter().map(|m| m * r * r / norm).collect(),
                },
            },
        };
        Self::new(family, self.a1, self.a2, self.delta1, self.delta2)
    }

    /// Whether `δ₂ < 1 ∧ d/2`, which makes the subordinate process transient.
    pub fn transient_in(&self, d: usize) -> bool {
        self.delta2 < (d as f64 / 2.0).min(1.0)
    }

    pub fn check_dimension(&self, d: usize) -> Result<()> {
        if d == 0 || d > crate::point::MAX_DIM {
            return Err(Error::domain(
                "dimension",
                format!("d = {d} outside 1..={}", crate::point::MAX_DIM),
            ));
        }
        if !self.transient_in(d) {
            return Err(Error::domain(
                "dimension",
                format!("delta2 = {} is not below 1 ∧ d/2 for d = {d}", self.delta2),
            ));
        }
        Ok(())
    }

    /// Finite-difference check that `φ` is increasing and concave on a
    /// logarithmic grid.
    pub fn shape_check(&self) -> Result<()> {
        let grid: Vec<f64> = (-24..=24).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
        let vals: Vec<f64> = grid.iter().map(|&l| self.phi(l)).collect::<Result<_>>()?;
        for i in 0..grid.len() - 1 {
            if !(vals[i + 1] > vals[i]) {
                return Err(Error::Construction(format!(
                    "phi is not increasing between {} and {}",
                    grid[i],
                    grid[i + 1]
                )));
            }
        }
        for i in 0..grid.len() - 2 {
            let s1 = (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]);
            let s2 = (vals[i + 2] - vals[i + 1]) / (grid[i + 2] - grid[i + 1]);
            if s2 > s1 * (1.0 + 1e-8) {
                return Err(Error::Construction(format!(
                    "phi is not concave near {}",
                    grid[i + 1]
                )));
            }
        }
        Ok(())
    }

    /// Total Lévy mass on `[eps, ∞)`.
    pub fn tail_mass(&self, eps: f64) -> f64 {
        self.pieces.iter().map(|p| p.mass_above(eps)).sum()
    }

    /// `∫_{t<eps} t μ(dt)`, the drift replacing jumps below `eps`.
    pub fn small_jump_drift(&self, eps: f64) -> f64 {
        self.pieces.iter().map(|p| p.moment_below(eps)).sum()
    }

    /// Lévy density `μ(t)`.
    pub fn levy_density(&self, t: f64) -> f64 {
        self.pieces.iter().map(|p| p.density(t)).sum()
    }
}

/// Outcome of [`verify_scaling`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: usize,
    /// Smallest relative distance of any ratio to the nearer sandwich bound.
    pub worst_slack: f64,
    pub violations: Vec<ScalingViolation>,
    pub phi_cap_violations: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingViolation {
    pub lambda: f64,
    pub x: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `λ ∈ {10^{k/4}: 0 ≤ k ≤ 16}` crossed with `x ∈ {10^{k/2}: -8 ≤ k ≤ 8}`.
pub fn default_scaling_grid() -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for i in 0..=16 {
        for k in -8..=8 {
            g.push((10f64.powf(i as f64 / 4.0), 10f64.powf(k as f64 / 2.0)));
        }
    }
    g
}

/// Checks `a₁λ^δ₁ ≤ φ(λx)/φ(x) ≤ a₂λ^δ₂` and `Φ(s) ≤ a₁⁻¹ s^{2δ₁}` for `s ≤ 1`.
pub fn verify_scaling(spec: &BernsteinSpec, grid: &[(f64, f64)]) -> Result<ScalingReport> {
    if grid.is_empty() {
        return Err(Error::domain("verify_scaling", "empty grid"));
    }
    const TOL: f64 = 1e-12;
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    let mut cap_violations = Vec::new();
    for &(lambda, x) in grid {
        if !(lambda >= 1.0 && x > 0.0) {
            return Err(Error::domain(
                "verify_scaling",
                format!("grid point (λ={lambda}, x={x}) needs λ ≥ 1, x > 0"),
            ));
        }
        let ratio = spec.phi(lambda * x)? / spec.phi(x)?;
        let lower = spec.a1 * lambda.powf(spec.delta1);
        let upper = spec.a2 * lambda.powf(spec.delta2);
        let slack = (ratio / lower - 1.0).min(upper / ratio - 1.0);
        worst = worst.min(slack.max(0.0));
        if slack < -TOL {
            violations.push(ScalingViolation {
                lambda,
                x,
                ratio,
                lower,
                upper,
            });
        }
        if x <= 1.0 {
            let bound = x.powf(2.0 * spec.delta1) / spec.a1;
            if spec.phi_cap(x)? > bound * (1.0 + TOL) {
                cap_violations.push(x);
            }
        }
    }
    cap_violations.dedup();
    let pass = violations.is_empty() && cap_violations.is_empty();
    Ok(ScalingReport {
        points: grid.len(),
        worst_slack: worst,
        violations,
        phi_cap_violations: cap_violations,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mix() -> BernsteinSpec {
        BernsteinSpec::mixture(&[(0.5, 0.3), (0.5, 0.45)]).unwrap()
    }

    #[test]
    fn phi_values() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        assert_eq!(s.phi(1.0).unwrap(), 1.0);
        assert_relative_eq!(s.phi(16.0).unwrap(), 3.031_433_133_020_796, max_relative = 1e-14);
        assert_relative_eq!(mix().phi(1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(s.phi(0.0).is_err());
    }

    #[test]
    fn phi_cap_values() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        assert_eq!(s.phi_cap(1.0).unwrap(), 1.0);
        assert_relative_eq!(s.phi_cap(2.0).unwrap(), 1.741_101_126_592_248, max_relative = 1e-14);
        assert_relative_eq!(s.phi_cap_inv(1.0).unwrap(), 1.0, max_relative = 1e-14);
        let m = mix();
        let x = m.phi_cap_inv(3.7).unwrap();
        assert_relative_eq!(m.phi_cap(x).unwrap(), 3.7, max_relative = 1e-10);
        assert!(s.phi_cap(-1.0).is_err());
    }

    #[test]
    fn weights_are_normalized() {
        let m = BernsteinSpec::mixture(&[(3.0, 0.3), (1.0, 0.45)]).unwrap();
        assert_relative_eq!(m.phi(1.0).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn scaling_exact_for_stable() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let r = verify_scaling(&s, &default_scaling_grid()).unwrap();
        assert!(r.pass);
        assert!(r.worst_slack < 1e-12);
    }

    #[test]
    fn scaling_mixture_passes() {
        let r = verify_scaling(&mix(), &default_scaling_grid()).unwrap();
        assert!(r.pass, "{:?}", r.violations.first());
    }

    #[test]
    fn scaling_violation_flagged() {
        let s = BernsteinSpec::new(Family::Stable { alpha: 0.4 }, 1.0, 1.0, 0.3, 0.3).unwrap();
        let r = verify_scaling(&s, &[(4.0, 1.0)]).unwrap();
        assert!(!r.pass);
        assert_eq!(r.violations[0].lambda, 4.0);
        assert_eq!(r.violations[0].x, 1.0);
    }

    #[test]
    fn rescale_identity_and_stable_invariance() {
        let m = mix();
        assert_eq!(m.rescale(1.0).unwrap(), m);
        let s = BernsteinSpec::stable(0.4).unwrap();
        assert_eq!(s.rescale(5.0).unwrap(), s);
    }

    #[test]
    fn rescale_mixture_matches_quotient() {
        let m = mix();
        let r = m.rescale(4.0).unwrap();
        assert_relative_eq!(r.phi(1.0).unwrap(), 1.0, max_relative = 1e-14);
        for &s in &[0.01, 0.7, 3.0, 250.0] {
            let direct = m.phi(s / 16.0).unwrap() / m.phi(1.0 / 16.0).unwrap();
            assert_relative_eq!(r.phi(s).unwrap(), direct, max_relative = 1e-13);
        }
        assert!(verify_scaling(&r, &default_scaling_grid()).unwrap().pass);
    }

    fn stable_table(alpha: f64) -> LevyTable {
        let t: Vec<f64> = (-12..=12).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
        let mu = t.iter().map(|t| t.powf(-1.0 - alpha)).collect();
        LevyTable { t, mu }
    }

    #[test]
    fn custom_table_reproduces_stable() {
        let c = BernsteinSpec::new(
            Family::Custom {
                table: stable_table(0.4),
            },
            1.0,
            1.0,
            0.4,
            0.4,
        )
        .unwrap();
        for &l in &[1e-3, 0.5, 2.0, 1e4] {
            assert_relative_eq!(c.phi(l).unwrap(), l.powf(0.4), max_relative = 1e-9);
        }
        let r = c.rescale(3.0).unwrap();
        assert_relative_eq!(r.phi(7.0).unwrap(), 7f64.powf(0.4), max_relative = 1e-9);
    }

    #[test]
    fn custom_table_rejects_bad_tails() {
        let table = LevyTable {
            t: vec![1.0, 2.0],
            mu: vec![1.0, 0.9],
        };
        assert!(BernsteinSpec::new(Family::Custom { table }, 1.0, 1.0, 0.3, 0.4).is_err());
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let s = BernsteinSpec::from_json(
            r#"{"family":"mixture","mixture_terms":[{"weight":1,"exponent":0.3},{"weight":1,"exponent":0.45}],
                "a1":1,"a2":1,"delta1":0.3,"delta2":0.45}"#,
        )
        .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(BernsteinSpec::from_json(&text).unwrap(), s);
        assert!(BernsteinSpec::from_json(
            r#"{"family":"stable","alpha":0.4,"a1":1,"a2":1,"delta1":0.4,"delta2":0.4,"extra":1}"#
        )
        .is_err());
        assert!(BernsteinSpec::from_json(
            r#"{"family":"stable","alpha":1.4,"a1":1,"a2":1,"delta1":0.4,"delta2":0.4}"#
        )
        .is_err());
    }

    #[test]
    fn levy_pieces_stable_tail_and_drift() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let g = gamma(0.6);
        assert_relative_eq!(s.tail_mass(0.01), 0.01f64.powf(-0.4) / g, max_relative = 1e-13);
        assert_relative_eq!(
            s.small_jump_drift(0.01),
            0.4 / g * 0.01f64.powf(0.6) / 0.6,
            max_relative = 1e-13
        );
    }

    #[test]
    fn transience_cap() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        assert!(s.check_dimension(1).is_ok());
        let t = BernsteinSpec::stable(0.6).unwrap();
        assert!(t.check_dimension(1).is_err());
        assert!(t.check_dimension(2).is_ok());
    }
}
