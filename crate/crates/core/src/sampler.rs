//! Seeded Monte Carlo for the subordinator `S`, the subordinate process
//! `X_t = W_{S_t}` (with `W` running at twice the standard speed) and exit
//! and hitting statistics.
//!
//! Subordinator jumps of size at least `ε` form a Poisson process of rate
//! `Λ = μ[ε, ∞)`; smaller jumps are replaced by their mean drift
//! `b_ε = ∫_0^ε t μ(dt)`. A subordinator jump `v` moves `X` by a centred
//! Gaussian vector with per-coordinate variance `2v`; the drift makes `X`
//! diffuse with per-coordinate variance `2b_ε` per unit time.

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::green::BallGeometry;
use crate::point::Point;
use crate::report::{EstimateReport, Verdict};
use crate::rng::{run_replicas, Rng};
use crate::stats::Running;

/// Positive `α`-stable variable with `E e^{-λZ} = e^{-λ^α}` (Kanter's
/// representation).
pub fn positive_stable(alpha: f64, rng: &mut Rng) -> f64 {
    let u: f64 = rng.random::<f64>() * std::f64::consts::PI;
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha);
    a * b
}

/// Cutoff sampler for subordinator jumps.
#[derive(Clone, Debug)]
pub struct SubordinatorSampler {
    spec: BernsteinSpec,
    eps: f64,
    rate: f64,
    drift: f64,
    /// Cumulative tail masses of the Lévy pieces above `eps`.
    cumulative: Vec<f64>,
}

impl SubordinatorSampler {
    pub fn new(spec: &BernsteinSpec, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::domain("subordinator", format!("cutoff {eps} must be positive")));
        }
        let mut cumulative = Vec::with_capacity(spec.pieces().len());
        let mut acc = 0.0;
        for p in spec.pieces() {
            acc += p.mass_above(eps);
            cumulative.push(acc);
        }
        Ok(SubordinatorSampler {
            spec: spec.clone(),
            eps,
            rate: acc,
            drift: spec.small_jump_drift(eps),
            cumulative,
        })
    }

    pub fn spec(&self) -> &BernsteinSpec {
        &self.spec
    }

    pub fn cutoff(&self) -> f64 {
        self.eps
    }

    /// Rate `Λ` of jumps of size at least the cutoff.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Drift `b_ε` replacing the jumps below the cutoff.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// A jump size drawn from `μ` restricted to `[ε, ∞)`.
    pub fn sample_jump(&self, rng: &mut Rng) -> f64 {
        let target = rng.random::<f64>() * self.rate;
        let i = self
            .cumulative
            .partition_point(|c| *c <= target)
            .min(self.cumulative.len() - 1);
        let u: f64 = rng.random();
        self.spec.pieces()[i].sample_above(self.eps, u).max(self.eps)
    }

    /// Subordinator path on `[0, T]`: jump times and sizes plus drift.
    pub fn sample_path(&self, horizon: f64, rng: &mut Rng) -> SubordinatorPath {
        let mut jumps = Vec::new();
        if self.rate > 0.0 {
            let mut t = 0.0;
            loop {
                let e: f64 = Exp1.sample(rng);
                t += e / self.rate;
                if t > horizon {
                    break;
                }
                jumps.push((t, self.sample_jump(rng)));
            }
        }
        SubordinatorPath {
            horizon,
            drift: self.drift,
            jumps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorPath {
    pub horizon: f64,
    pub drift: f64,
    /// `(time, size)` pairs in increasing time.
    pub jumps: Vec<(f64, f64)>,
}

impl SubordinatorPath {
    /// `S_T = b_ε T + Σ jumps`.
    pub fn terminal(&self) -> f64 {
        self.drift * self.horizon + self.jumps.iter().map(|j| j.1).sum::<f64>()
    }
}

/// Exact `S_t` for stable and mixture families: `Σ (wᵢt)^{1/αᵢ} Z_{αᵢ}`.
pub fn exact_subordinator(spec: &BernsteinSpec, t: f64, rng: &mut Rng) -> Result<f64> {
    let comps = spec
        .stable_components()
        .ok_or_else(|| Error::Unsupported("exact sampling needs a stable or mixture family".into()))?;
    Ok(comps
        .iter()
        .map(|&(w, a)| (w * t).powf(1.0 / a) * positive_stable(a, rng))
        .sum())
}

/// Exact `X_t` started at `x`: `x + √(2S_t)·N(0, I)`.
pub fn exact_sbm(spec: &BernsteinSpec, x: &Point, t: f64, rng: &mut Rng) -> Result<Point> {
    let s = exact_subordinator(spec, t, rng)?;
    let sd = (2.0 * s).sqrt();
    let mut p = *x;
    for c in p.as_mut_slice() {
        let z: f64 = StandardNormal.sample(rng);
        *c += sd * z;
    }
    Ok(p)
}

/// Sampling parameters shared by path-based estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub horizon: f64,
    pub cutoff: f64,
    /// Spacing of the observation grid between jumps; `∞` observes only at
    /// jump times and the horizon.
    pub grid_step: f64,
}

/// Jump of `X` at time `time` driven by a subordinator jump `sub_jump`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub pre: Point,
    pub post: Point,
    pub sub_jump: f64,
}

/// One observation of the walker: a jump, a grid tick, or the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathEvent {
    Jump(JumpEvent),
    Tick { time: f64, pos: Point },
    End { time: f64, pos: Point },
}

impl PathEvent {
    pub fn time(&self) -> f64 {
        match self {
            PathEvent::Jump(j) => j.time,
            PathEvent::Tick { time, .. } | PathEvent::End { time, .. } => *time,
        }
    }

    /// Position after the event.
    pub fn pos(&self) -> Point {
        match self {
            PathEvent::Jump(j) => j.post,
            PathEvent::Tick { pos, .. } | PathEvent::End { pos, .. } => *pos,
        }
    }

    /// Left limit `X_{t-}`.
    pub fn pre(&self) -> Point {
        match self {
            PathEvent::Jump(j) => j.pre,
            PathEvent::Tick { pos, .. } | PathEvent::End { pos, .. } => *pos,
        }
    }
}

/// Samplers at cutoffs `ε_k = ε_min·4^k`, for position-dependent cutoffs.
#[derive(Clone, Debug)]
pub struct CutoffLadder {
    samplers: Vec<SubordinatorSampler>,
    eps_min: f64,
}

impl CutoffLadder {
    pub fn new(spec: &BernsteinSpec, eps_min: f64, eps_max: f64) -> Result<Self> {
        if !(eps_max >= eps_min) {
            return Err(Error::domain("cutoff_ladder", "eps_max must be at least eps_min"));
        }
        let levels = ((eps_max / eps_min).log(4.0).floor() as usize) + 1;
        let samplers = (0..levels)
            .map(|k| SubordinatorSampler::new(spec, eps_min * 4f64.powi(k as i32)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CutoffLadder { samplers, eps_min })
    }

    /// Largest level whose cutoff does not exceed `eps`.
    pub fn level_for(&self, eps: f64) -> usize {
        if !(eps > self.eps_min) {
            return 0;
        }
        ((eps / self.eps_min).log(4.0).floor() as usize).min(self.samplers.len() - 1)
    }

    pub fn samplers(&self) -> &[SubordinatorSampler] {
        &self.samplers
    }
}

/// Desired cutoff as a function of the current position.
pub type CutoffRule<'a> = &'a (dyn Fn(&Point) -> f64 + Sync);

/// Event-driven simulator of `X` on `[0, horizon]`.
pub struct SbmWalker<'a> {
    samplers: &'a [SubordinatorSampler],
    rule: Option<(&'a CutoffLadder, CutoffRule<'a>)>,
    level: usize,
    rng: &'a mut Rng,
    pos: Point,
    time: f64,
    horizon: f64,
    grid_step: f64,
    next_jump: f64,
    next_tick: f64,
    done: bool,
}

impl<'a> SbmWalker<'a> {
    pub fn new(
        sampler: &'a SubordinatorSampler,
        start: Point,
        horizon: f64,
        grid_step: f64,
        rng: &'a mut Rng,
    ) -> Self {
        Self::build(std::slice::from_ref(sampler), None, 0, start, horizon, grid_step, rng)
    }

    /// Walker whose cutoff follows `rule`, rounded down to a ladder level
    /// after every event.
    pub fn adaptive(
        ladder: &'a CutoffLadder,
        rule: CutoffRule<'a>,
        start: Point,
        horizon: f64,
        grid_step: f64,
        rng: &'a mut Rng,
    ) -> Self {
        let level = ladder.level_for(rule(&start));
        Self::build(&ladder.samplers, Some((ladder, rule)), level, start, horizon, grid_step, rng)
    }

    fn build(
        samplers: &'a [SubordinatorSampler],
        rule: Option<(&'a CutoffLadder, CutoffRule<'a>)>,
        level: usize,
        start: Point,
        horizon: f64,
        grid_step: f64,
        rng: &'a mut Rng,
    ) -> Self {
        let mut w = SbmWalker {
            samplers,
            rule,
            level,
            rng,
            pos: start,
            time: 0.0,
            horizon,
            grid_step,
            next_jump: 0.0,
            next_tick: grid_step,
            done: false,
        };
        w.next_jump = w.draw_wait();
        w
    }

    fn sampler(&self) -> &'a SubordinatorSampler {
        &self.samplers[self.level]
    }

    fn draw_wait(&mut self) -> f64 {
        let rate = self.sampler().rate;
        if rate > 0.0 {
            let e: f64 = Exp1.sample(self.rng);
            self.time + e / rate
        } else {
            f64::INFINITY
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn position(&self) -> Point {
        self.pos
    }

    /// Cutoff in force until the next event.
    pub fn cutoff(&self) -> f64 {
        self.sampler().eps
    }

    /// Lets the continuous part diffuse until `t`.
    fn diffuse_to(&mut self, t: f64) {
        let dt = t - self.time;
        let drift = self.sampler().drift;
        if dt > 0.0 && drift > 0.0 {
            let sd = (2.0 * drift * dt).sqrt();
            for c in self.pos.as_mut_slice() {
                let z: f64 = StandardNormal.sample(self.rng);
                *c += sd * z;
            }
        }
        self.time = t;
    }

    /// Re-selects the ladder level; waiting times are memoryless, so a new
    /// one is drawn whenever the rate changes.
    fn relevel(&mut self) {
        if let Some((ladder, rule)) = self.rule {
            let level = ladder.level_for(rule(&self.pos));
            if level != self.level {
                self.level = level;
                self.next_jump = self.draw_wait();
            }
        }
    }
}

impl Iterator for SbmWalker<'_> {
    type Item = PathEvent;

    fn next(&mut self) -> Option<PathEvent> {
        if self.done {
            return None;
        }
        let t = self.next_jump.min(self.next_tick).min(self.horizon);
        self.diffuse_to(t);
        if t >= self.horizon {
            self.done = true;
            return Some(PathEvent::End {
                time: t,
                pos: self.pos,
            });
        }
        if self.next_jump <= self.next_tick {
            let v = self.sampler().sample_jump(self.rng);
            let pre = self.pos;
            let sd = (2.0 * v).sqrt();
            for c in self.pos.as_mut_slice() {
                let z: f64 = StandardNormal.sample(self.rng);
                *c += sd * z;
            }
            self.next_jump = self.draw_wait();
            self.relevel();
            Some(PathEvent::Jump(JumpEvent {
                time: t,
                pre,
                post: self.pos,
                sub_jump: v,
            }))
        } else {
            self.next_tick += self.grid_step;
            self.relevel();
            Some(PathEvent::Tick {
                time: t,
                pos: self.pos,
            })
        }
    }
}

/// A recorded trajectory of `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    pub d: usize,
    pub horizon: f64,
    pub cutoff: f64,
    pub seed: u64,
    pub replica: u64,
    /// Observation times, starting at 0 and ending at the horizon.
    pub grid: Vec<f64>,
    pub positions: Vec<Point>,
    pub jumps: Vec<JumpEvent>,
}

impl JumpPath {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time");
        for k in 0..self.d {
            let _ = write!(s, ",x{}", k + 1);
        }
        s.push_str(",is_jump,sub_jump\n");
        let mut jumps = self.jumps.iter().peekable();
        for (t, p) in self.grid.iter().zip(&self.positions) {
            let _ = write!(s, "{t:.17e}");
            for c in p.as_slice() {
                let _ = write!(s, ",{c:.17e}");
            }
            match jumps.peek() {
                Some(j) if j.time == *t => {
                    let _ = writeln!(s, ",1,{:.17e}", j.sub_jump);
                    jumps.next();
                }
                _ => s.push_str(",0,0\n"),
            }
        }
        s
    }
}

/// Samples replica `replica` of the path of `X` from `start`.
pub fn sample_sbm_path(
    sampler: &SubordinatorSampler,
    start: Point,
    params: &PathParams,
    seed: u64,
    replica: u64,
) -> JumpPath {
    let mut rng = crate::rng::replica_rng(seed, replica);
    let mut grid = vec![0.0];
    let mut positions = vec![start];
    let mut jumps = Vec::new();
    for ev in SbmWalker::new(sampler, start, params.horizon, params.grid_step, &mut rng) {
        grid.push(ev.time());
        positions.push(ev.pos());
        if let PathEvent::Jump(j) = ev {
            jumps.push(j);
        }
    }
    JumpPath {
        d: start.dim(),
        horizon: params.horizon,
        cutoff: sampler.cutoff(),
        seed,
        replica,
        grid,
        positions,
        jumps,
    }
}

/// Region whose exit time is observed.
pub trait Domain {
    fn contains(&self, x: &Point) -> bool;
}

impl Domain for BallGeometry {
    fn contains(&self, x: &Point) -> bool {
        BallGeometry::contains(self, x)
    }
}

/// All of `ℝ^d`.
pub struct WholeSpace;

impl Domain for WholeSpace {
    fn contains(&self, _x: &Point) -> bool {
        true
    }
}

/// Complement of a closed ball; its exit time is the hitting time of the ball.
pub struct OutsideBall(pub BallGeometry);

impl Domain for OutsideBall {
    fn contains(&self, x: &Point) -> bool {
        self.0.delta(x) < 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub exit_time: f64,
    pub pre_exit: Point,
    pub exit_pos: Point,
    /// The horizon was reached inside the domain.
    pub censored: bool,
}

/// First observation time at which the path lies outside `domain`.
pub fn first_exit<I, D>(start: Point, events: I, domain: &D) -> ExitRecord
where
    I: IntoIterator<Item = PathEvent>,
    D: Domain + ?Sized,
{
    if !domain.contains(&start) {
        return ExitRecord {
            exit_time: 0.0,
            pre_exit: start,
            exit_pos: start,
            censored: false,
        };
    }
    let mut last = ExitRecord {
        exit_time: 0.0,
        pre_exit: start,
        exit_pos: start,
        censored: true,
    };
    for ev in events {
        let pos = ev.pos();
        if !domain.contains(&pos) {
            return ExitRecord {
                exit_time: ev.time(),
                pre_exit: ev.pre(),
                exit_pos: pos,
                censored: false,
            };
        }
        last = ExitRecord {
            exit_time: ev.time(),
            pre_exit: pos,
            exit_pos: pos,
            censored: true,
        };
    }
    last
}

/// Exact `P_0(|X_τ| ≥ r)` for the exit of `B(0, s)` by the isotropic
/// `2α`-stable process, in any dimension.
pub fn stable_overshoot_probability(alpha: f64, s: f64, r: f64) -> f64 {
    beta_reg(alpha, 1.0 - alpha, (s / r).powi(2))
}

/// Monte Carlo settings for exit and hitting probes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub n: usize,
    pub seed: u64,
    /// Cutoff as a multiple of `s²` (scale-consistent).
    pub cutoff_scale: f64,
    /// Horizon as a multiple of `Φ(s)`.
    pub horizon_scale: f64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams {
            n: 100_000,
            seed: crate::rng::DEFAULT_SEED,
            cutoff_scale: 1e-6,
            horizon_scale: 1e3,
        }
    }
}

/// MC estimate of `P_0(|X_{τ_{B(0,s)}}| ≥ r)` against `φ(r⁻²)/φ(s⁻²)`.
pub fn exit_overshoot_probe(
    spec: &BernsteinSpec,
    d: usize,
    s: f64,
    r: f64,
    params: &ProbeParams,
) -> Result<EstimateReport> {
    if !(s > 0.0 && s <= r / 2.0) {
        return Err(Error::domain("exit_overshoot_probe", format!("need 0 < s <= r/2, got s={s}, r={r}")));
    }
    let shape = spec.phi(r.powi(-2))? / spec.phi(s.powi(-2))?;
    let sampler = SubordinatorSampler::new(spec, params.cutoff_scale * s * s)?;
    let horizon = params.horizon_scale * spec.phi_cap(s)?;
    let ball = BallGeometry::centered(d, s)?;
    let out: Vec<(bool, bool)> = run_replicas(params.seed, params.n, |_, rng| {
        let start = Point::origin(d);
        let walker = SbmWalker::new(&sampler, start, horizon, f64::INFINITY, rng);
        let e = first_exit(start, walker, &ball);
        (e.censored, !e.censored && e.exit_pos.norm() >= r)
    });
    let censored = out.iter().filter(|o| o.0).count();
    let hits: Running = out.iter().map(|o| o.1 as u8 as f64).collect();
    let p = hits.mean();
    let mut rep = EstimateReport::new("exit_overshoot", p)
        .with_mc(hits.std_error(), params.n as u64, params.seed)
        .detail("shape", shape)
        .detail("c_empirical", p / shape)
        .detail("s", s)
        .detail("r", r)
        .detail("cutoff", sampler.cutoff())
        .detail("censored_fraction", censored as f64 / params.n as f64);
    if let Some(a) = spec.stable_alpha() {
        rep = rep.with_reference(stable_overshoot_probability(a, s, r));
    }
    let verdict = if censored as f64 > 0.1 * params.n as f64 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(rep.with_verdict(verdict))
}

/// `max(2, ⌈(a₁/(2c))^{1/(2δ₁)}⌉)`.
pub fn choose_m(_d: usize, delta1: f64, a1: f64, c_empirical: f64) -> Result<u32> {
    if !(c_empirical > 0.0) {
        return Err(Error::domain("choose_m", "c must be positive"));
    }
    let v = (a1 / (2.0 * c_empirical)).powf(1.0 / (2.0 * delta1));
    // absorb rounding in exact powers such as 16^{5/4}
    let m = (v * (1.0 - 1e-12)).ceil();
    Ok((m.max(2.0)).min(u32::MAX as f64) as u32)
}

/// Per-radius landing statistics of [`annulus_hitting_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub m: u32,
    pub radii: Vec<f64>,
    /// `P(X_{τ_{B(0,R_n)}} ∈ V̄(0, R_n, M R_n))`.
    pub land_prob: Vec<f64>,
    pub land_se: Vec<f64>,
    /// Mean number of distinct annuli visited per path.
    pub mean_visited: f64,
    pub visited_counts: Vec<u32>,
    pub censored_fraction: f64,
    pub n: usize,
    pub seed: u64,
    pub verdict: Verdict,
}

/// Landing probabilities of exits from `B(0, R_n)` in the closed annuli
/// `V̄(0, R_n, M R_n)` and the number of annuli visited per path started at
/// `start`. The cutoff is `cutoff_scale·max(|x|, R_1)²`.
pub fn annulus_hitting_probe(
    spec: &BernsteinSpec,
    start: Point,
    m: u32,
    radii: &[f64],
    params: &ProbeParams,
) -> Result<AnnulusReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
        return Err(Error::domain("annulus_hitting_probe", "radii must be positive, increasing"));
    }
    let mf = m as f64;
    let r_min = radii[0];
    let r_max = radii[radii.len() - 1];
    let ladder = CutoffLadder::new(
        spec,
        params.cutoff_scale * r_min * r_min,
        params.cutoff_scale * (4.0 * mf * r_max).powi(2),
    )?;
    let rule = |x: &Point| params.cutoff_scale * x.norm().max(r_min).powi(2);
    let horizon = params.horizon_scale * spec.phi_cap(r_max)?;
    let k = radii.len();
    let out: Vec<(Vec<i8>, u32, bool)> = run_replicas(params.seed, params.n, |_, rng| {
        // -1 pending, 0 landed outside, 1 landed inside
        let mut landed = vec![-1i8; k];
        let mut visited = vec![false; k];
        let mut mark = |p: &Point, landed: &mut Vec<i8>| {
            let n = p.norm();
            for i in 0..k {
                if n >= radii[i] && n <= mf * radii[i] {
                    visited[i] = true;
                }
                if landed[i] < 0 && n >= radii[i] {
                    landed[i] = (n <= mf * radii[i]) as i8;
                }
            }
        };
        mark(&start, &mut landed);
        for ev in SbmWalker::adaptive(&ladder, &rule, start, horizon, f64::INFINITY, rng) {
            mark(&ev.pos(), &mut landed);
            if landed[k - 1] >= 0 {
                break;
            }
        }
        let censored = landed[k - 1] < 0;
        (landed, visited.iter().filter(|v| **v).count() as u32, censored)
    });
    let mut land_prob = Vec::with_capacity(k);
    let mut land_se = Vec::with_capacity(k);
    for i in 0..k {
        let r: Running = out.iter().filter(|o| o.0[i] >= 0).map(|o| o.0[i] as f64).collect();
        land_prob.push(r.mean());
        land_se.push(r.std_error());
    }
    let censored = out.iter().filter(|o| o.2).count() as f64 / params.n as f64;
    let visited_counts: Vec<u32> = out.iter().map(|o| o.1).collect();
    let mean_visited = visited_counts.iter().map(|c| *c as f64).sum::<f64>() / params.n as f64;
    let floor_ok = land_prob
        .iter()
        .zip(&land_se)
        .all(|(p, se)| *p >= 0.5 - 3.0 * se);
    let verdict = if censored > 0.1 {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(floor_ok)
    };
    Ok(AnnulusReport {
        m,
        radii: radii.to_vec(),
        land_prob,
        land_se,
        mean_visited,
        visited_counts,
        censored_fraction: censored,
        n: params.n,
        seed: params.seed,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use approx::assert_relative_eq;

    #[test]
    fn kanter_laplace_transform() {
        let mut rng = replica_rng(11, 0);
        let n = 100_000;
        let r: Running = (0..n).map(|_| (-positive_stable(0.5, &mut rng)).exp()).collect();
        assert!((r.mean() - (-1f64).exp()).abs() < 3.0 * r.std_error());
    }

    #[test]
    fn cutoff_laplace_transform_and_counts() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let smp = SubordinatorSampler::new(&s, 1e-4).unwrap();
        let t = 0.5;
        let paths: Vec<SubordinatorPath> = run_replicas(3, 40_000, |_, r| smp.sample_path(t, r));
        for lambda in [0.5, 1.0, 2.0] {
            let r: Running = paths.iter().map(|p| (-lambda * p.terminal()).exp()).collect();
            let exact = (-t * s.phi(lambda).unwrap()).exp();
            assert!((r.mean() - exact).abs() < 3.0 * r.std_error() + 1e-3, "λ={lambda}");
        }
        let c: Running = paths.iter().map(|p| p.jumps.len() as f64).collect();
        assert!((c.mean() - smp.rate() * t).abs() < 3.0 * c.std_error());
    }

    #[test]
    fn path_determinism_and_consistency() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let smp = SubordinatorSampler::new(&s, 1e-3).unwrap();
        let pp = PathParams {
            horizon: 1.0,
            cutoff: 1e-3,
            grid_step: 0.1,
        };
        let start = Point::on_axis(2, 0.5);
        let a = sample_sbm_path(&smp, start, &pp, 5, 7);
        let b = sample_sbm_path(&smp, start, &pp, 5, 7);
        assert_eq!(a, b);
        assert_eq!(a.positions[0], start);
        assert_eq!(*a.grid.last().unwrap(), 1.0);
        assert!(a.grid.windows(2).all(|w| w[1] >= w[0]));
        for j in &a.jumps {
            assert!(j.sub_jump >= 1e-3 && j.time > 0.0 && j.time <= 1.0);
        }
        assert!(a.to_csv().starts_with("time,x1,x2,is_jump,sub_jump\n"));
    }

    #[test]
    fn characteristic_function_matches() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let smp = SubordinatorSampler::new(&s, 1e-5).unwrap();
        let xs: Vec<f64> = run_replicas(17, 40_000, |_, r| {
            let w = SbmWalker::new(&smp, Point::origin(1), 1.0, f64::INFINITY, r);
            w.last().unwrap().pos().as_slice()[0]
        });
        for xi in [0.5f64, 1.0, 2.0] {
            let c: Running = xs.iter().map(|x| (xi * x).cos()).collect();
            let exact = (-xi.powf(0.8)).exp();
            assert!((c.mean() - exact).abs() < 3.0 * c.std_error() + 2e-3, "ξ={xi}");
        }
    }

    #[test]
    fn exits_trivial_cases() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let smp = SubordinatorSampler::new(&s, 1e-3).unwrap();
        let mut rng = replica_rng(1, 1);
        let w = SbmWalker::new(&smp, Point::origin(1), 2.0, 0.5, &mut rng);
        let e = first_exit(Point::origin(1), w, &WholeSpace);
        assert!(e.censored);
        assert_eq!(e.exit_time, 2.0);
        let ball = BallGeometry::centered(1, 1.0).unwrap();
        let e = first_exit(Point::on_axis(1, 3.0), std::iter::empty(), &ball);
        assert_eq!(e.exit_time, 0.0);
        assert!(!e.censored);
    }

    #[test]
    fn overshoot_matches_exact_law() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let p = ProbeParams {
            n: 20_000,
            seed: 9,
            ..ProbeParams::default()
        };
        let rep = exit_overshoot_probe(&s, 1, 1.0, 4.0, &p).unwrap();
        assert!(rep.z_score().unwrap() < 3.0, "{rep:?}");
        assert_relative_eq!(rep.details["shape"], 16f64.powf(-0.4), max_relative = 1e-14);
        assert!(exit_overshoot_probe(&s, 1, 3.0, 4.0, &p).is_err());
    }

    #[test]
    fn adaptive_walker_with_constant_rule_matches_fixed() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let ladder = CutoffLadder::new(&s, 1e-4, 1.0).unwrap();
        let k = ladder.level_for(0.0064);
        assert_eq!(ladder.samplers()[k].cutoff(), 1e-4 * 4f64.powi(k as i32));
        let eps = ladder.samplers()[k].cutoff();
        let rule = |_: &Point| eps;
        let mut r1 = replica_rng(4, 4);
        let mut r2 = replica_rng(4, 4);
        let a: Vec<PathEvent> =
            SbmWalker::adaptive(&ladder, &rule, Point::origin(2), 1.0, 0.25, &mut r1).collect();
        let b: Vec<PathEvent> =
            SbmWalker::new(&ladder.samplers()[k], Point::origin(2), 1.0, 0.25, &mut r2).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn choose_m_examples() {
        assert_eq!(choose_m(1, 0.4, 1.0, 2.0).unwrap(), 2);
        assert_eq!(choose_m(1, 0.4, 1.0, 1.0 / 32.0).unwrap(), 32);
        assert_eq!(choose_m(3, 0.9, 0.1, 50.0).unwrap(), 2);
    }

    #[test]
    fn annulus_containing_start_is_visited() {
        let s = BernsteinSpec::stable(0.4).unwrap();
        let p = ProbeParams {
            n: 200,
            seed: 3,
            ..ProbeParams::default()
        };
        let rep = annulus_hitting_probe(&s, Point::on_axis(1, 1.5), 2, &[1.0], &p).unwrap();
        assert!(rep.visited_counts.iter().all(|c| *c == 1));
        let rep = annulus_hitting_probe(&s, Point::origin(1), 2, &[1.0, 2.0], &p).unwrap();
        assert!(rep.visited_counts.iter().all(|c| *c <= 2));
        assert!(rep.land_prob.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(rep.radii.len(), 2);
    }
}
