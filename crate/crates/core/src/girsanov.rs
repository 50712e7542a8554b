//! Doléans-Dade weights `L_t = exp(-∫_0^t h(X_s) ds)·Π_{s≤t}(1 + F(X_{s-}, X_s))`
//! along sampled paths, martingale and reweighting checks, relative entropy
//! `E[L_t log L_t]` and the `F²` expectation that decides its finiteness.
//!
//! With a cutoff `ε` only subordinator jumps `v ≥ ε` are simulated, so `h`
//! is the rate of `F` against the jump kernel of that band; the weight is
//! then an exact martingale for the simulated process.

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::functionals::make_entropy_counterexample;
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::functionals::{entropy_counterexample_base, gh_partial_sums, small_jump_moment, Functional, GhSums, RateTable};
use crate::levy_kernel::{levy_system_rate, radial_rate, JumpKernel, PairFunction, RadialProfile, SphereRule};
use crate::point::Point;
use crate::quadrature::QuadOptions;
use crate::report::{EstimateReport, Finiteness, Verdict};
use crate::rng::run_replicas;
use crate::sampler::{CutoffLadder, JumpPath, PathEvent, SbmWalker, SubordinatorSampler};
use crate::stats::{effective_sample_size, Running};

/// Lévy-system rate `h(x) = ∫ F(x,y) j(|x-y|) dy` as a function of position.
#[derive(Clone, Debug)]
pub enum RateFn {
    Zero,
    /// Depends on `|x|` only.
    Radial(RateTable),
    /// `d = 1`, supported on intervals `[lo, hi]` with uniform grids.
    Axis(Vec<AxisSegment>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSegment {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl RateFn {
    /// Tabulates the rate of `f` against `kernel`.
    pub fn build(f: &Functional, kernel: &JumpKernel, opts: &QuadOptions) -> Result<Self> {
        if f.is_zero() {
            return Ok(RateFn::Zero);
        }
        if f.is_rotation_invariant() {
            return Ok(RateFn::Radial(RateTable::build(f, kernel, 1e-4, 1e6, 40, opts)?));
        }
        if f.dim() != 1 {
            return Err(Error::Unsupported("position-dependent rates are tabulated for d = 1".into()));
        }
        let sphere = SphereRule::new(1, 1)?;
        let mut segs = Vec::new();
        for b in f.hotspots() {
            let (lo, hi) = (b.center.as_slice()[0] - b.radius, b.center.as_slice()[0] + b.radius);
            let n = 513;
            let values = (0..n)
                .into_par_iter()
                .map(|i| {
                    let y = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                    levy_system_rate(kernel, f, &Point::on_axis(1, y), &sphere, opts)
                })
                .collect::<Result<Vec<_>>>()?;
            segs.push(AxisSegment { lo, hi, values });
        }
        Ok(RateFn::Axis(segs))
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            RateFn::Zero => 0.0,
            RateFn::Radial(t) => t.value(x.norm()),
            RateFn::Axis(segs) => {
                let y = x.as_slice()[0];
                let i = segs.partition_point(|s| s.hi < y);
                match segs.get(i) {
                    Some(s) if y >= s.lo => {
                        let n = s.values.len() - 1;
                        let u = (y - s.lo) / (s.hi - s.lo) * n as f64;
                        let k = (u.floor() as usize).min(n - 1);
                        let w = u - k as f64;
                        s.values[k] * (1.0 - w) + s.values[k + 1] * w
                    }
                    _ => 0.0,
                }
            }
        }
    }
}

/// `L_t` and its factors at each observation time of a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTrajectory {
    pub times: Vec<f64>,
    /// `∫_0^t h(X_s) ds`.
    pub compensator: Vec<f64>,
    /// `Σ_{s≤t} log(1 + F(X_{s-}, X_s))`.
    pub log_product: Vec<f64>,
    pub weight: Vec<f64>,
}

impl WeightTrajectory {
    pub fn terminal(&self) -> f64 {
        *self.weight.last().unwrap()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,compensator,log_product,weight\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[i], self.compensator[i], self.log_product[i], self.weight[i]
            );
        }
        s
    }
}

fn log1p_checked(v: f64, time: f64) -> Result<f64> {
    if v <= -1.0 {
        return Err(Error::Degenerate(format!("F = {v} <= -1 at jump time {time}")));
    }
    Ok(v.ln_1p())
}

/// Doléans-Dade weight along a recorded path; `h` is integrated by the
/// trapezoid rule on the observation grid using left limits at jumps.
pub fn doleans_weight<F: PairFunction + ?Sized>(path: &JumpPath, f: &F, h: &RateFn) -> Result<WeightTrajectory> {
    let mut jumps = path.jumps.iter().peekable();
    let mut out = WeightTrajectory {
        times: vec![0.0],
        compensator: vec![0.0],
        log_product: vec![0.0],
        weight: vec![1.0],
    };
    let (mut comp, mut lp) = (0.0, 0.0);
    let mut h_last = h.value(&path.positions[0]);
    for i in 1..path.grid.len() {
        let t = path.grid[i];
        let dt = t - path.grid[i - 1];
        let jump = match jumps.peek() {
            Some(j) if j.time == t => jumps.next(),
            _ => None,
        };
        let pre = jump.map_or(path.positions[i], |j| j.pre);
        comp += 0.5 * (h_last + h.value(&pre)) * dt;
        if let Some(j) = jump {
            lp += log1p_checked(f.value(&j.pre, &j.post), t)?;
        }
        h_last = h.value(&path.positions[i]);
        out.times.push(t);
        out.compensator.push(comp);
        out.log_product.push(lp);
        out.weight.push((lp - comp).exp());
    }
    Ok(out)
}

/// Monte Carlo settings for weight estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub n: usize,
    pub seed: u64,
    pub cutoff: f64,
    pub grid_step: f64,
}

/// Per-path totals along one trajectory.
#[derive(Clone, Copy, Debug, Default)]
struct Totals {
    log_weight: f64,
    f2_sum: f64,
    f2_rate: f64,
    x_end: f64,
}

/// Compensated path quantities shared by the weight estimators.
struct WeightSetup {
    f: Functional,
    sampler: SubordinatorSampler,
    h: RateFn,
    h2: RateFn,
}

impl WeightSetup {
    fn new(f: &Functional, cutoff: f64) -> Result<Self> {
        let spec = f.spec();
        let sampler = SubordinatorSampler::new(spec, cutoff)?;
        let kernel = JumpKernel::band(spec, f.dim(), cutoff, f64::INFINITY);
        let opts = QuadOptions::default().with_rel_tol(1e-8).with_abs_tol(1e-300);
        Ok(WeightSetup {
            h: RateFn::build(f, &kernel, &opts)?,
            h2: RateFn::build(&f.squared(), &kernel, &opts)?,
            f: f.clone(),
            sampler,
        })
    }

    fn run(&self, x: &Point, t: f64, grid_step: f64, rng: &mut crate::rng::Rng) -> Result<Totals> {
        let mut tot = Totals::default();
        let (mut comp, mut lp) = (0.0, 0.0);
        let (mut last_t, mut h_last, mut h2_last) = (0.0, self.h.value(x), self.h2.value(x));
        let mut end = *x;
        for ev in SbmWalker::new(&self.sampler, *x, t, grid_step, rng) {
            let pre = ev.pre();
            let dt = ev.time() - last_t;
            comp += 0.5 * (h_last + self.h.value(&pre)) * dt;
            tot.f2_rate += 0.5 * (h2_last + self.h2.value(&pre)) * dt;
            if let PathEvent::Jump(j) = ev {
                let v = self.f.value(&j.pre, &j.post);
                lp += log1p_checked(v, j.time)?;
                tot.f2_sum += v * v;
            }
            end = ev.pos();
            last_t = ev.time();
            h_last = self.h.value(&end);
            h2_last = self.h2.value(&end);
        }
        tot.log_weight = lp - comp;
        tot.x_end = end.norm();
        Ok(tot)
    }

    fn run_all(&self, x: &Point, t: f64, p: &WeightParams) -> Result<Vec<Totals>> {
        run_replicas(p.seed, p.n, |_, rng| self.run(x, t, p.grid_step, rng))
            .into_iter()
            .collect()
    }
}

/// `E_x L_t` against 1.
pub fn expected_weight(f: &Functional, x: &Point, t: f64, p: &WeightParams) -> Result<EstimateReport> {
    let setup = WeightSetup::new(f, p.cutoff)?;
    let tots = setup.run_all(x, t, p)?;
    let w: Vec<f64> = tots.iter().map(|s| s.log_weight.exp()).collect();
    let r: Running = w.iter().copied().collect();
    let rep = EstimateReport::new("expected_weight", r.mean())
        .with_mc(r.std_error(), p.n as u64, p.seed)
        .with_reference(1.0)
        .detail("t", t)
        .detail("cutoff", p.cutoff)
        .detail("ess", effective_sample_size(&w));
    let ok = rep.z_score().unwrap() <= 3.0;
    Ok(rep.with_verdict(Verdict::from_bool(ok)))
}

/// Both sides of `E Σ_{s≤t} F²(X_{s-}, X_s) = E ∫_0^t h₂(X_s) ds` on the same
/// paths; agreement is judged on the paired difference. For radial `F` the
/// quadrature `t·∫F² j` is attached as reference.
pub fn f2_expectation(f: &Functional, x: &Point, t: f64, p: &WeightParams) -> Result<EstimateReport> {
    if f.is_zero() {
        return Ok(EstimateReport::new("f2_expectation", 0.0)
            .with_mc(0.0, p.n as u64, p.seed)
            .with_reference(0.0)
            .detail("rate_side", 0.0));
    }
    let setup = WeightSetup::new(f, p.cutoff)?;
    let tots = setup.run_all(x, t, p)?;
    let jumps: Running = tots.iter().map(|s| s.f2_sum).collect();
    let rates: Running = tots.iter().map(|s| s.f2_rate).collect();
    let diff: Running = tots.iter().map(|s| s.f2_sum - s.f2_rate).collect();
    let z = diff.mean().abs() / diff.std_error();
    let mut rep = EstimateReport::new("f2_expectation", jumps.mean())
        .with_mc(jumps.std_error(), p.n as u64, p.seed)
        .detail("rate_side", rates.mean())
        .detail("rate_side_se", rates.std_error())
        .detail("paired_diff", diff.mean())
        .detail("paired_diff_se", diff.std_error())
        .detail("t", t)
        .detail("cutoff", p.cutoff);
    if let Some(q) = f2_quadrature_rate(f)? {
        rep = rep.detail("f2_quadrature", q * t);
    }
    Ok(rep.with_verdict(Verdict::from_bool(z <= 3.0)))
}

/// `∫F² j` for functionals of `|x - y|`.
fn f2_quadrature_rate(f: &Functional) -> Result<Option<f64>> {
    if !f.is_translation_invariant() {
        return Ok(None);
    }
    let (c, profile) = f.squared().envelope();
    let kernel = JumpKernel::new(f.spec(), f.dim());
    Ok(Some(c * radial_rate(f.spec(), &kernel, &profile, &QuadOptions::default().with_rel_tol(1e-10))?))
}

/// Entropy report: `E[L_t log L_t]` with its `F²` companion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub estimate: f64,
    pub se: f64,
    pub ess: f64,
    pub f2_estimate: f64,
    pub f2_se: f64,
    pub f2_quadrature: Option<f64>,
    pub t: f64,
    pub n: usize,
    pub seed: u64,
    pub verdict: Verdict,
}

/// Relative entropy of the transformed law against the base law on the
/// time-`t` σ-field, as `E[L_t log L_t]` under the base measure.
pub fn entropy_estimate(f: &Functional, x: &Point, t: f64, p: &WeightParams) -> Result<EntropyReport> {
    if f.is_zero() {
        return Ok(EntropyReport {
            estimate: 0.0,
            se: 0.0,
            ess: p.n as f64,
            f2_estimate: 0.0,
            f2_se: 0.0,
            f2_quadrature: Some(0.0),
            t,
            n: p.n,
            seed: p.seed,
            verdict: Verdict::Pass,
        });
    }
    let setup = WeightSetup::new(f, p.cutoff)?;
    let tots = setup.run_all(x, t, p)?;
    let w: Vec<f64> = tots.iter().map(|s| s.log_weight.exp()).collect();
    // `E[L - 1] = 0` exactly, so subtracting it removes the martingale noise
    let ent: Running = tots
        .iter()
        .map(|s| {
            let l = s.log_weight.exp();
            l * s.log_weight - (l - 1.0)
        })
        .collect();
    let f2: Running = tots.iter().map(|s| s.f2_sum).collect();
    let verdict = if ent.std_error() > 0.5 * ent.mean().abs() {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(ent.mean() >= -3.0 * ent.std_error())
    };
    Ok(EntropyReport {
        estimate: ent.mean(),
        se: ent.std_error(),
        ess: effective_sample_size(&w),
        f2_estimate: f2.mean(),
        f2_se: f2.std_error(),
        f2_quadrature: f2_quadrature_rate(f)?.map(|q| q * t),
        t,
        n: p.n,
        seed: p.seed,
        verdict,
    })
}

/// `E[L_t g(|X_t|)]` under the base law against `Ẽ[g(|X_t|)]` under the
/// tilted jump intensity `(1 + F)j`, simulated by thinning.
pub fn reweighting_check<G>(f: &Functional, x: &Point, t: f64, p: &WeightParams, g: G) -> Result<EstimateReport>
where
    G: Fn(f64) -> f64 + Sync,
{
    let setup = WeightSetup::new(f, p.cutoff)?;
    let tots = setup.run_all(x, t, p)?;
    let base: Running = tots.iter().map(|s| s.log_weight.exp() * g(s.x_end)).collect();
    let fmax = f.bound();
    let sampler = &setup.sampler;
    let drift = sampler.drift();
    let rate = sampler.rate() * (1.0 + fmax);
    let tilted: Vec<f64> = run_replicas(p.seed ^ 0x7417_ed00, p.n, |_, rng| {
        let mut pos = *x;
        let mut time = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            let next = (time + e / rate).min(t);
            let sd = (2.0 * drift * (next - time)).sqrt();
            for c in pos.as_mut_slice() {
                let z: f64 = StandardNormal.sample(rng);
                *c += sd * z;
            }
            time = next;
            if time >= t {
                break;
            }
            let v = sampler.sample_jump(rng);
            let mut post = pos;
            let sj = (2.0 * v).sqrt();
            for c in post.as_mut_slice() {
                let z: f64 = StandardNormal.sample(rng);
                *c += sj * z;
            }
            if rng.random::<f64>() * (1.0 + fmax) < 1.0 + f.value(&pos, &post) {
                pos = post;
            }
        }
        g(pos.norm())
    });
    let tl: Running = tilted.iter().copied().collect();
    let se = (base.std_error().powi(2) + tl.std_error().powi(2)).sqrt();
    let ok = (base.mean() - tl.mean()).abs() <= 3.0 * se;
    Ok(EstimateReport::new("reweighting", base.mean())
        .with_mc(base.std_error(), p.n as u64, p.seed)
        .with_reference(tl.mean())
        .detail("tilted_se", tl.std_error())
        .detail("joint_se", se)
        .with_verdict(Verdict::from_bool(ok)))
}

/// Nested-horizon estimates of `E_x Σ_{s≤T} F²` with a position-dependent
/// cutoff `eps_scale·ℓ(x)²` and compensated small jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonSweep {
    pub horizons: Vec<f64>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `S_{T_{k+1}} - S_{T_k}` on the same paths.
    pub increments: Vec<f64>,
    pub increment_se: Vec<f64>,
    /// Every successive pair agrees within 3 joint standard errors.
    pub stabilizes: bool,
    /// Every increment exceeds 3 of its standard errors.
    pub grows: bool,
    pub n: usize,
    pub seed: u64,
}

impl HorizonSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("horizon,estimate,std_error\n");
        for i in 0..self.horizons.len() {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e}",
                self.horizons[i], self.estimates[i], self.std_errors[i]
            );
        }
        s
    }
}

pub fn f2_horizon_sweep(
    f: &Functional,
    x: &Point,
    horizons: &[f64],
    eps_scale: f64,
    n: usize,
    seed: u64,
) -> Result<HorizonSweep> {
    if horizons.is_empty() || horizons.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("f2_horizon_sweep", "horizons must be increasing"));
    }
    let spec = f.spec();
    let f2 = f.squared();
    let (c_env, profile) = f2.envelope();
    let t_max = horizons[horizons.len() - 1];
    // generous range for the cutoff ladder
    let reach = 1e3 * spec.phi_cap_inv(t_max)?.max(1.0) + x.norm();
    let ladder = CutoffLadder::new(spec, eps_scale * 1e-2, eps_scale * reach * reach)?;
    let moments = ladder
        .samplers()
        .iter()
        .map(|s| small_jump_moment(spec, f.dim(), &profile, s.cutoff()))
        .collect::<Result<Vec<_>>>()?;
    let rule = |y: &Point| {
        let l = f.length_scale(y).min(reach);
        eps_scale * l * l
    };
    let per_path: Vec<Vec<f64>> = run_replicas(seed, n, |_, rng| {
        let mut out = Vec::with_capacity(horizons.len());
        let mut sum = 0.0;
        let mut k = 0;
        let mut last_t = 0.0;
        let mut last_x = *x;
        let mut walker = SbmWalker::adaptive(&ladder, &rule, *x, t_max, f64::INFINITY, rng);
        loop {
            let m = moments[ladder.level_for(walker.cutoff())];
            let Some(ev) = walker.next() else { break };
            let coef = f2.local_coefficient(&last_x);
            // split the compensation at horizon boundaries
            let mut s0 = last_t;
            while k < horizons.len() && horizons[k] <= ev.time() && horizons[k] < t_max {
                sum += c_env * coef * m * (horizons[k] - s0);
                s0 = horizons[k];
                out.push(sum);
                k += 1;
            }
            sum += c_env * coef * m * (ev.time() - s0);
            if let PathEvent::Jump(j) = ev {
                let v = f.value(&j.pre, &j.post);
                sum += v * v;
            }
            last_t = ev.time();
            last_x = ev.pos();
        }
        while out.len() < horizons.len() {
            out.push(sum);
        }
        out
    });
    let k = horizons.len();
    let mut estimates = Vec::with_capacity(k);
    let mut std_errors = Vec::with_capacity(k);
    for i in 0..k {
        let r: Running = per_path.iter().map(|v| v[i]).collect();
        estimates.push(r.mean());
        std_errors.push(r.std_error());
    }
    let mut increments = Vec::new();
    let mut increment_se = Vec::new();
    let mut stabilizes = true;
    let mut grows = true;
    for i in 1..k {
        let r: Running = per_path.iter().map(|v| v[i] - v[i - 1]).collect();
        increments.push(r.mean());
        increment_se.push(r.std_error());
        let joint = (std_errors[i].powi(2) + std_errors[i - 1].powi(2)).sqrt();
        stabilizes &= (estimates[i] - estimates[i - 1]).abs() <= 3.0 * joint;
        grows &= r.mean() > 3.0 * r.std_error();
    }
    Ok(HorizonSweep {
        horizons: horizons.to_vec(),
        estimates,
        std_errors,
        increments,
        increment_se,
        stabilizes,
        grows,
        n,
        seed,
    })
}

/// Membership report for the small-time class and the square-integrable
/// class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct I2Report {
    /// `C·∫F̃ j`; `sup_x E_x|A_t| ≤ t·j_rate`.
    pub j_rate: f64,
    pub j_bound: f64,
    pub j_verdict: Verdict,
    /// `C²·∫F̃² j`, bounding the `F²` rate everywhere.
    pub i2_rate: f64,
    pub i2_bound: f64,
    pub i2_local: Verdict,
    /// Ball-by-ball sums of `E_0 Σ F²` over all time, when available.
    pub global: Option<GhSums>,
    pub global_finiteness: Option<Finiteness>,
}

/// `∫F̃ j`, infinite when `F̃ = Φ^β` with `β ≤ 1` since `j(r)·r^d ≍ 1/Φ(r)` near 0.
fn envelope_rate(spec: &BernsteinSpec, kernel: &JumpKernel, profile: &RadialProfile, opts: &QuadOptions) -> Result<f64> {
    match profile {
        RadialProfile::PhiPower { beta } if *beta <= 1.0 => Ok(f64::INFINITY),
        _ => radial_rate(spec, kernel, profile, opts),
    }
}

pub fn class_i2_check(f: &Functional, t: f64) -> Result<I2Report> {
    let spec = f.spec();
    let kernel = JumpKernel::new(spec, f.dim());
    let opts = QuadOptions::default().with_rel_tol(1e-9);
    let (c, profile) = f.envelope();
    let (c2, profile2) = f.squared().envelope();
    let j_rate = c * envelope_rate(spec, &kernel, &profile, &opts)?;
    let i2_rate = c2 * envelope_rate(spec, &kernel, &profile2, &opts)?;
    let global = match entropy_counterexample_base(f) {
        Some(h) if f.dim() == 1 => {
            let mut g = gh_partial_sums(&h, usize::MAX, &QuadOptions::default().with_rel_tol(1e-4))?;
            for v in g.terms.iter_mut().chain(g.partial.iter_mut()) {
                *v /= 64.0;
            }
            if let Some(fit) = g.fit.as_mut() {
                fit.slope /= 64.0;
                fit.intercept /= 64.0;
                fit.slope_se /= 64.0;
            }
            Some(g)
        }
        _ => None,
    };
    let global_finiteness = global.as_ref().map(|g| g.finiteness);
    Ok(I2Report {
        j_rate,
        j_bound: t * j_rate,
        j_verdict: Verdict::from_bool(j_rate.is_finite()),
        i2_rate,
        i2_bound: t * i2_rate,
        i2_local: Verdict::from_bool(i2_rate.is_finite()),
        global,
        global_finiteness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::BernsteinSpec;
    use crate::functionals::make_fuchsian;
    use crate::levy_kernel::RadialProfile;
    use crate::sampler::JumpEvent;
    use approx::assert_relative_eq;

    fn stable() -> BernsteinSpec {
        BernsteinSpec::stable(0.4).unwrap()
    }

    struct Fixed(Vec<f64>);

    impl PairFunction for Fixed {
        fn value_at(&self, x: &Point, _y: &Point, _dist: f64) -> f64 {
            self.0[x.as_slice()[0] as usize]
        }
    }

    #[test]
    fn product_formula_on_synthetic_path() {
        let pt = |x: f64| Point::on_axis(1, x);
        let path = JumpPath {
            d: 1,
            horizon: 1.0,
            cutoff: 1e-3,
            seed: 0,
            replica: 0,
            grid: vec![0.0, 0.5, 0.7, 1.0],
            positions: vec![pt(0.0), pt(1.0), pt(1.0), pt(1.0)],
            jumps: vec![
                JumpEvent { time: 0.5, pre: pt(0.0), post: pt(1.0), sub_jump: 0.1 },
                JumpEvent { time: 0.7, pre: pt(1.0), post: pt(1.0), sub_jump: 0.1 },
            ],
        };
        let w = doleans_weight(&path, &Fixed(vec![0.5, -0.2]), &RateFn::Zero).unwrap();
        assert_relative_eq!(w.terminal(), 1.2, max_relative = 1e-14);
        for i in 0..w.times.len() {
            assert_relative_eq!(w.weight[i].ln(), w.log_product[i] - w.compensator[i], epsilon = 1e-14);
        }
        assert!(doleans_weight(&path, &Fixed(vec![-1.0, 0.0]), &RateFn::Zero).is_err());
    }

    #[test]
    fn zero_functional_weight_is_one() {
        let z = Functional::zero(&stable(), 1);
        let p = WeightParams { n: 50, seed: 1, cutoff: 1e-4, grid_step: 0.01 };
        let r = expected_weight(&z, &Point::origin(1), 0.1, &p).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(entropy_estimate(&z, &Point::origin(1), 0.1, &p).unwrap().estimate, 0.0);
    }

    #[test]
    fn radial_f2_matches_quadrature() {
        let f = Functional::radial(&stable(), 1, RadialProfile::PhiPower { beta: 1.5 }, 0.5).unwrap();
        let p = WeightParams { n: 20_000, seed: 2, cutoff: 1e-6, grid_step: 0.01 };
        let r = f2_expectation(&f, &Point::origin(1), 0.1, &p).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        let q = r.details["f2_quadrature"];
        assert!((r.estimate - q).abs() < 3.0 * r.std_error + 0.02 * q, "{r:?}");
    }

    #[test]
    fn small_functional_entropy_is_half_f2() {
        let f = make_fuchsian(&stable(), 1, 1.5, 0.05).unwrap();
        let p = WeightParams { n: 20_000, seed: 4, cutoff: 1e-6, grid_step: 0.01 };
        let e = entropy_estimate(&f, &Point::origin(1), 0.1, &p).unwrap();
        assert!(e.estimate >= -3.0 * e.se);
        let ratio = e.estimate / (0.5 * e.f2_estimate);
        assert!((ratio - 1.0).abs() < 0.25, "{e:?}");
    }

    #[test]
    fn tilted_law_matches_reweighting() {
        let f = make_fuchsian(&stable(), 1, 1.5, 0.5).unwrap();
        let p = WeightParams { n: 20_000, seed: 8, cutoff: 1e-4, grid_step: 0.01 };
        let r = reweighting_check(&f, &Point::on_axis(1, 0.5), 0.2, &p, |r| (-r).exp()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn class_reports() {
        let f = make_fuchsian(&stable(), 1, 1.5, 1.0).unwrap();
        let r = class_i2_check(&f, 0.1).unwrap();
        assert_eq!(r.j_verdict, Verdict::Pass);
        assert!(r.global.is_none());
        let z = class_i2_check(&Functional::zero(&stable(), 1), 0.1).unwrap();
        assert_eq!(z.j_rate, 0.0);
        assert_eq!(z.i2_local, Verdict::Pass);
    }

    #[test]
    fn entropy_counterexample_classes() {
        let f = make_entropy_counterexample(&stable(), 1, 0.2, 0.8, 8).unwrap();
        let r = class_i2_check(&f, 1.0).unwrap();
        assert!(r.j_rate.is_infinite());
        assert_eq!(r.i2_local, Verdict::Pass);
        assert_eq!(r.global_finiteness, Some(Finiteness::Divergent));
    }
}
