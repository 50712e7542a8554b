//! Green functions: the free Riesz potential, the explicit stable Green
//! function of a ball, the two-sided envelope shape, the 3G ratio, the
//! key double integral and the Poisson kernel lower bound.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::gamma;

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::levy_kernel::{JumpKernel, PairFunction};
use crate::point::Point;
use crate::quadrature::{tanh_sinh, Node, QuadOptions};
use crate::report::{EstimateReport, Verdict};
use crate::rng::{replica_rng, Rng};
use crate::stats::{linear_fit, LinearFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    pub center: Point,
    pub radius: f64,
}

impl BallGeometry {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain("ball", format!("radius {radius} must be positive")));
        }
        Ok(BallGeometry { center, radius })
    }

    pub fn centered(d: usize, radius: f64) -> Result<Self> {
        Self::new(Point::origin(d), radius)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Signed distance to the boundary, positive inside.
    #[inline]
    pub fn delta(&self, x: &Point) -> f64 {
        self.radius - x.dist(&self.center)
    }

    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        self.delta(x) > 0.0
    }

    /// Uniform point in the ball.
    pub fn sample(&self, rng: &mut Rng) -> Point {
        let d = self.dim();
        loop {
            let mut p = Point::origin(d);
            for c in p.as_mut_slice() {
                *c = rng.random_range(-1.0..1.0);
            }
            if p.norm() < 1.0 {
                return self.center + p.scale(self.radius);
            }
        }
    }
}

/// Two-sided bound `[lower, upper]` produced by a named estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenEnvelope {
    pub lower: f64,
    pub upper: f64,
    pub formula: String,
}

impl GreenEnvelope {
    fn shape(value: f64, formula: &str) -> Self {
        GreenEnvelope {
            lower: value,
            upper: value,
            formula: formula.to_string(),
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Riesz constant in `G(r) = c·r^{β-d}` for the isotropic `β`-stable process.
pub fn riesz_constant(d: usize, beta_: f64) -> f64 {
    let hd = d as f64 / 2.0;
    gamma(hd - beta_ / 2.0) / (2f64.powf(beta_) * PI.powf(hd) * gamma(beta_ / 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeGreen {
    pub envelope: GreenEnvelope,
    /// Exact Riesz value for the stable family.
    pub exact: Option<f64>,
}

/// Free Green function: the shape `r^{-d}Φ(r)` and, for the stable family,
/// the exact Riesz potential.
pub fn free_green(spec: &BernsteinSpec, d: usize, r: f64) -> Result<FreeGreen> {
    if !(r > 0.0) {
        return Err(Error::domain("free_green", format!("r = {r} must be positive")));
    }
    if !(spec.delta2 < d as f64 / 2.0) {
        return Err(Error::domain(
            "free_green",
            format!("delta2 = {} >= d/2: process is not transient", spec.delta2),
        ));
    }
    let shape = spec.phi_cap(r)? / r.powi(d as i32);
    let exact = spec
        .stable_alpha()
        .map(|a| riesz_constant(d, 2.0 * a) * r.powf(2.0 * a - d as f64));
    Ok(FreeGreen {
        envelope: GreenEnvelope::shape(shape, "free"),
        exact,
    })
}

/// Explicit Green function of `B(0, r)` for the `β = 2α`-stable process,
/// from squared norms and the exact separation `dist`.
fn stable_ball_core(d: usize, beta_: f64, r: f64, nx2: f64, ny2: f64, dist: f64) -> f64 {
    let r2 = r * r;
    let a = beta_ / 2.0;
    let b = d as f64 / 2.0 - a;
    let kappa = gamma(d as f64 / 2.0) / (2f64.powf(beta_) * PI.powf(d as f64 / 2.0) * gamma(a).powi(2));
    let w = (r2 - nx2) * (r2 - ny2) / (r2 * dist * dist);
    if !(w > 0.0) {
        return 0.0;
    }
    // ∫₀^w s^{a-1}(1+s)^{-d/2} ds = B(a,b)·I_{w/(1+w)}(a,b)
    let inc = if w <= 1.0 {
        beta_reg(a, b, w / (1.0 + w))
    } else {
        1.0 - beta_reg(b, a, 1.0 / (1.0 + w))
    };
    kappa * dist.powf(beta_ - d as f64) * beta(a, b) * inc
}

/// Green function of the ball for the isotropic stable process.
pub fn ball_green_stable(alpha: f64, d: usize, r: f64, x: &Point, y: &Point) -> Result<f64> {
    if !(2.0 * alpha < d as f64) {
        return Err(Error::domain("ball_green_stable", "needs d > 2α"));
    }
    let (nx, ny) = (x.norm(), y.norm());
    if nx >= r || ny >= r {
        return Err(Error::domain("ball_green_stable", "points must lie inside the ball"));
    }
    let dist = x.dist(y);
    if dist == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(stable_ball_core(d, 2.0 * alpha, r, nx * nx, ny * ny, dist))
}

/// Envelope shape `Φ(|x-y|)|x-y|^{-d}(1 ∧ Φ(δ(x))^{1/2}Φ(δ(y))^{1/2}/Φ(|x-y|))`.
pub fn ball_green_envelope(
    spec: &BernsteinSpec,
    geom: &BallGeometry,
    x: &Point,
    y: &Point,
) -> Result<GreenEnvelope> {
    if geom.radius > 1.0 {
        return Err(Error::domain("ball_green_envelope", "estimate is stated for r <= 1"));
    }
    let (dx, dy) = (geom.delta(x), geom.delta(y));
    if dx < 0.0 || dy < 0.0 {
        return Err(Error::domain("ball_green_envelope", "points must lie in the closed ball"));
    }
    let dist = x.dist(y);
    if dist == 0.0 {
        return Err(Error::domain("ball_green_envelope", "x = y"));
    }
    let v = envelope_shape(spec, geom.dim(), dx, dy, dist);
    Ok(GreenEnvelope::shape(v, "ball"))
}

#[inline]
fn envelope_shape(spec: &BernsteinSpec, d: usize, dx: f64, dy: f64, dist: f64) -> f64 {
    let pd = spec.phi_cap0(dist);
    let bf = (spec.phi_cap0(dx) * spec.phi_cap0(dy)).sqrt() / pd;
    pd / dist.powi(d as i32) * bf.min(1.0)
}

/// Ball Green function used by the 3G and key-integral computations: the
/// explicit formula for stable families, the envelope shape otherwise.
#[derive(Clone, Debug)]
pub struct BallGreen {
    spec: BernsteinSpec,
    geom: BallGeometry,
    alpha: Option<f64>,
}

impl BallGreen {
    pub fn new(spec: &BernsteinSpec, geom: &BallGeometry) -> Result<Self> {
        let d = geom.dim();
        let alpha = spec.stable_alpha();
        if let Some(a) = alpha {
            if !(2.0 * a < d as f64) {
                return Err(Error::domain("ball_green", "needs d > 2α"));
            }
        } else if geom.radius > 1.0 {
            return Err(Error::domain("ball_green", "envelope is stated for r <= 1"));
        }
        Ok(BallGreen {
            spec: spec.clone(),
            geom: geom.clone(),
            alpha,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.alpha.is_some()
    }

    /// `G(x, y)` with the separation supplied exactly.
    #[inline]
    pub fn eval_dist(&self, x: &Point, y: &Point, dist: f64) -> f64 {
        let d = self.geom.dim();
        let rx = *x - self.geom.center;
        let ry = *y - self.geom.center;
        match self.alpha {
            Some(a) => {
                let (nx2, ny2) = (rx.norm().powi(2), ry.norm().powi(2));
                stable_ball_core(d, 2.0 * a, self.geom.radius, nx2, ny2, dist)
            }
            None => {
                let dx = (self.geom.radius - rx.norm()).max(0.0);
                let dy = (self.geom.radius - ry.norm()).max(0.0);
                envelope_shape(&self.spec, d, dx, dy, dist)
            }
        }
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        self.eval_dist(x, y, x.dist(y))
    }
}

/// Outcome of one 3G evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeG {
    pub ratio: f64,
    pub bound: f64,
    pub in_er: bool,
}

impl ThreeG {
    pub fn passes(&self, c4: f64) -> bool {
        self.ratio <= c4 * self.bound
    }
}

/// `G(x,y)G(z,w)/G(x,w)` against the two-branch right-hand side of the 3G
/// inequality (without its constant).
pub fn three_g_check(
    green: &BallGreen,
    x: &Point,
    y: &Point,
    z: &Point,
    w: &Point,
) -> Result<ThreeG> {
    let geom = &green.geom;
    for p in [x, y, z, w] {
        if !geom.contains(p) {
            return Err(Error::domain("three_g_check", "points must lie inside the ball"));
        }
    }
    let gxw = green.eval(x, w);
    if !(gxw > 0.0) || !gxw.is_finite() {
        return Err(Error::Degenerate("G(x, w) vanishes or is infinite".into()));
    }
    let ratio = green.eval(x, y) * green.eval(z, w) / gxw;
    let spec = &green.spec;
    let d = geom.dim() as i32;
    let (dxy, dzw, dxw) = (x.dist(y), z.dist(w), x.dist(w));
    let geo = dxw.powi(d) / (dxy.powi(d) * dzw.powi(d));
    let in_er = dxw <= 0.5 * geom.delta(x).max(geom.delta(w));
    let bound = if in_er {
        spec.phi_cap0(dxy) * spec.phi_cap0(dzw) / spec.phi_cap0(dxw) * geo
    } else {
        (spec.phi_cap0(dxy) * spec.phi_cap0(dzw)).sqrt() * geo
    };
    Ok(ThreeG {
        ratio,
        bound,
        in_er,
    })
}

/// Stored calibration of the 3G constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeGCalibration {
    pub seed: u64,
    pub c4_empirical: f64,
    /// Largest ratio among the raw samples, before local ascent.
    pub sample_max: f64,
    pub quadruple_count: u64,
    pub radius: f64,
    pub in_er_fraction: f64,
}

fn quadruple(geom: &BallGeometry, rng: &mut Rng) -> [Point; 4] {
    [geom.sample(rng), geom.sample(rng), geom.sample(rng), geom.sample(rng)]
}

fn score(green: &BallGreen, q: &[Point; 4]) -> Option<f64> {
    if q.iter().any(|p| !green.geom.contains(p)) {
        return None;
    }
    let t = three_g_check(green, &q[0], &q[1], &q[2], &q[3]).ok()?;
    let v = t.ratio / t.bound;
    v.is_finite().then_some(v)
}

/// Compass search for a local maximum of ratio/bound starting from `q`.
fn ascend(green: &BallGreen, mut q: [Point; 4], mut best: f64) -> f64 {
    let d = green.geom.dim();
    let mut step = 0.05 * green.geom.radius;
    let min_step = 1e-7 * green.geom.radius;
    let mut evals = 0;
    while step > min_step && evals < 20_000 {
        let mut improved = false;
        for i in 0..4 {
            for k in 0..d {
                for sgn in [1.0, -1.0] {
                    let mut cand = q;
                    cand[i].as_mut_slice()[k] += sgn * step;
                    evals += 1;
                    if let Some(v) = score(green, &cand) {
                        if v > best {
                            best = v;
                            q = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Empirical `C4 = sup ratio/bound`: the maximum over `n` uniform
/// quadruples, refined by local ascent from the best 16 of them.
pub fn calibrate_three_g(green: &BallGreen, n: u64, seed: u64) -> Result<ThreeGCalibration> {
    const SEEDS: usize = 16;
    let mut rng = replica_rng(seed, 0);
    let mut top: Vec<(f64, [Point; 4])> = Vec::with_capacity(SEEDS + 1);
    let mut in_er = 0u64;
    for _ in 0..n {
        let q = quadruple(&green.geom, &mut rng);
        let t = three_g_check(green, &q[0], &q[1], &q[2], &q[3])?;
        in_er += t.in_er as u64;
        let v = t.ratio / t.bound;
        if top.len() < SEEDS || v > top[top.len() - 1].0 {
            let pos = top.partition_point(|e| e.0 >= v);
            top.insert(pos, (v, q));
            top.truncate(SEEDS);
        }
    }
    let sample_max = top.first().map_or(0.0, |e| e.0);
    let c4 = top
        .iter()
        .map(|(v, q)| ascend(green, *q, *v))
        .fold(sample_max, f64::max);
    Ok(ThreeGCalibration {
        seed,
        c4_empirical: c4,
        sample_max,
        quadruple_count: n,
        radius: green.geom.radius,
        in_er_fraction: in_er as f64 / n as f64,
    })
}

/// Fraction of `n` fresh quadruples satisfying the 3G bound with constant `c4`.
pub fn validate_three_g(green: &BallGreen, c4: f64, n: u64, seed: u64) -> Result<EstimateReport> {
    let mut rng = replica_rng(seed, 0);
    let mut pass = 0u64;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let [x, y, z, w] = quadruple(&green.geom, &mut rng);
        let t = three_g_check(green, &x, &y, &z, &w)?;
        pass += t.passes(c4) as u64;
        worst = worst.max(t.ratio / t.bound);
    }
    let frac = pass as f64 / n as f64;
    Ok(EstimateReport::new("three_g_pass_rate", frac)
        .with_mc(0.0, n, seed)
        .with_reference(1.0)
        .detail("c4", c4)
        .detail("max_ratio_over_bound", worst)
        .with_verdict(Verdict::from_bool(pass == n)))
}

/// `∬_{B×B} G(x,y)G(z,w)/G(x,w)·F(y,z)·j(|y-z|) dz dy` for `d = 1`.
///
/// All singular points (`y = x`, `z = y`, `z = w`) are interval endpoints of
/// the double-exponential rule, so their distances are exact.
pub fn key_integral<F: PairFunction + ?Sized>(
    green: &BallGreen,
    kernel: &JumpKernel,
    f: &F,
    x: &Point,
    w: &Point,
    opts: &QuadOptions,
) -> Result<f64> {
    let geom = &green.geom;
    if geom.dim() != 1 {
        return Err(Error::Unsupported("key_integral is implemented for d = 1".into()));
    }
    if !geom.contains(x) || !geom.contains(w) {
        return Err(Error::domain("key_integral", "x and w must lie inside the ball"));
    }
    let c = geom.center.as_slice()[0];
    let r = geom.radius;
    let (xs, ws) = (x.as_slice()[0], w.as_slice()[0]);
    let gxw = green.eval(x, w);
    if !(gxw > 0.0 && gxw.is_finite()) {
        return Err(Error::Degenerate("G(x, w) vanishes or is infinite".into()));
    }
    let inner_opts = opts.with_rel_tol((opts.rel_tol * 1e-2).max(1e-12));
    let p1 = |v: f64| Point::on_axis(1, v);
    let (lo, hi) = (c - r, c + r);
    // Outer breakpoints with their exact distances to x and to w.
    let mut outer: Vec<(f64, f64, f64)> = vec![
        (lo, xs - lo, ws - lo),
        (xs, 0.0, (ws - xs).abs()),
        (ws, (ws - xs).abs(), 0.0),
        (hi, hi - xs, hi - ws),
    ];
    outer.sort_by(|a, b| a.0.total_cmp(&b.0));
    outer.dedup_by(|a, b| a.0 == b.0);
    let mut total = 0.0;
    let mut failure: Option<Error> = None;
    for seg in outer.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let val = tanh_sinh(
            |n: Node| {
                let y = n.x;
                let dxy = offset_dist(a.0, b.0, xs, a.1, b.1, &n);
                let dyw = offset_dist(a.0, b.0, ws, a.2, b.2, &n);
                let py = p1(y);
                let gxy = green.eval_dist(x, &py, dxy);
                if gxy == 0.0 {
                    return 0.0;
                }
                // Inner breakpoints with exact distances to y and to w.
                let (dly, dlw) = (y - lo, ws - lo);
                let (dhy, dhw) = (hi - y, hi - ws);
                let mut inner_pts = vec![(lo, dly, dlw), (y, 0.0, dyw), (ws, dyw, 0.0), (hi, dhy, dhw)];
                inner_pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                inner_pts.dedup_by(|a, b| a.0 == b.0);
                let mut inner = 0.0;
                for iseg in inner_pts.windows(2) {
                    let (ia, ib) = (iseg[0], iseg[1]);
                    if ib.0 <= ia.0 {
                        continue;
                    }
                    let res = tanh_sinh(
                        |m: Node| {
                            let dyz = offset_dist(ia.0, ib.0, y, ia.1, ib.1, &m);
                            let dzw = offset_dist(ia.0, ib.0, ws, ia.2, ib.2, &m);
                            let pz = p1(m.x);
                            let fv = f.value_at(&py, &pz, dyz);
                            if fv == 0.0 {
                                return 0.0;
                            }
                            green.eval_dist(&pz, w, dzw) * fv * kernel.j(dyz)
                        },
                        ia.0,
                        ib.0,
                        &inner_opts,
                    );
                    match res {
                        Ok(q) => inner += q.value,
                        Err(e) => {
                            failure.get_or_insert(e);
                        }
                    }
                }
                gxy * inner
            },
            a.0,
            b.0,
            opts,
        )?;
        total += val.value;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(total / gxw)
}

/// Distance from a node of `[a, b]` to a point `p` outside `(a, b)`, given
/// the exact distances `da = |a - p|` and `db = |b - p|`.
#[inline]
fn offset_dist(a: f64, b: f64, p: f64, da: f64, db: f64, n: &Node) -> f64 {
    if p <= a {
        n.dl + da
    } else if p >= b {
        n.dr + db
    } else {
        (n.x - p).abs()
    }
}

/// Result of a key-integral radius sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeySweep {
    pub radii: Vec<f64>,
    pub sup_integral: Vec<f64>,
    pub fit: LinearFit,
}

impl KeySweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,sup_integral,slope_fit\n");
        for (r, v) in self.radii.iter().zip(&self.sup_integral) {
            let _ = writeln!(s, "{r:.17e},{v:.17e},{:.17e}", self.fit.slope);
        }
        s
    }
}

/// Relative `(x, w)` positions used by the sweep, as fractions of the radius.
pub const KEY_SAMPLE: [(f64, f64); 6] = [
    (0.0, 0.5),
    (-0.3, 0.3),
    (0.2, 0.8),
    (-0.7, 0.6),
    (0.5, 0.9),
    (0.0, -0.95),
];

/// Supremum of the key integral over `KEY_SAMPLE` for each radius of
/// `B(0, r)`, with a log-log fit of sup against `r`.
pub fn key_integral_sweep<F: PairFunction + ?Sized>(
    spec: &BernsteinSpec,
    f: &F,
    radii: &[f64],
    sample: &[(f64, f64)],
    opts: &QuadOptions,
) -> Result<KeySweep> {
    let kernel = JumpKernel::new(spec, 1);
    let mut sups = Vec::with_capacity(radii.len());
    for &r in radii {
        let geom = BallGeometry::centered(1, r)?;
        let green = BallGreen::new(spec, &geom)?;
        let mut sup: f64 = 0.0;
        for &(px, pw) in sample {
            let v = key_integral(
                &green,
                &kernel,
                f,
                &Point::on_axis(1, px * r),
                &Point::on_axis(1, pw * r),
                opts,
            )?;
            sup = sup.max(v);
        }
        sups.push(sup);
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = sups.iter().map(|v| v.ln()).collect();
    Ok(KeySweep {
        radii: radii.to_vec(),
        sup_integral: sups,
        fit: linear_fit(&lx, &ly),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R0Result {
    /// Largest dyadic radius whose sweep supremum is below `epsilon`.
    pub r0: Option<f64>,
    pub epsilon: f64,
    /// Radius and value of the last evaluation.
    pub radius: f64,
    pub value: f64,
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection over `r = 2^{-k}`, `0 ≤ k ≤ max_k`, assuming the supremum is
/// increasing in `r`.
pub fn r0_solve<F: PairFunction + ?Sized>(
    spec: &BernsteinSpec,
    f: &F,
    epsilon: f64,
    max_k: u32,
    sample: &[(f64, f64)],
    opts: &QuadOptions,
) -> Result<R0Result> {
    if !(epsilon > 0.0) {
        return Err(Error::domain("r0_solve", "epsilon must be positive"));
    }
    let mut evals = Vec::new();
    let value_at = |k: u32, evals: &mut Vec<(f64, f64)>| -> Result<f64> {
        let r = 2f64.powi(-(k as i32));
        let v = key_integral_sweep(spec, f, &[r], sample, opts)?.sup_integral[0];
        evals.push((r, v));
        Ok(v)
    };
    if value_at(0, &mut evals)? < epsilon {
        let (radius, value) = evals[0];
        return Ok(R0Result {
            r0: Some(1.0),
            epsilon,
            radius,
            value,
            evaluations: evals,
        });
    }
    if value_at(max_k, &mut evals)? >= epsilon {
        let (radius, value) = evals[1];
        return Ok(R0Result {
            r0: None,
            epsilon,
            radius,
            value,
            evaluations: evals,
        });
    }
    // invariant: value(lo) >= eps, value(hi) < eps
    let (mut lo, mut hi) = (0u32, max_k);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if value_at(mid, &mut evals)? < epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r0 = 2f64.powi(-(hi as i32));
    let value = evals.iter().find(|(r, _)| *r == r0).map(|e| e.1).unwrap_or(f64::NAN);
    Ok(R0Result {
        r0: Some(r0),
        epsilon,
        radius: r0,
        value,
        evaluations: evals,
    })
}

/// Closed-form Poisson kernel of `B(0, r)` for the `2α`-stable process.
pub fn stable_poisson_kernel(alpha: f64, d: usize, r: f64, x: &Point, z: &Point) -> Result<f64> {
    let (nx, nz) = (x.norm(), z.norm());
    if nx >= r || nz <= r {
        return Err(Error::domain("stable_poisson_kernel", "need |x| < r < |z|"));
    }
    let hd = d as f64 / 2.0;
    let c = gamma(hd) * PI.powf(-hd - 1.0) * (PI * alpha).sin();
    Ok(c * ((r * r - nx * nx) / (nz * nz - r * r)).powf(alpha) * x.dist(z).powi(-(d as i32)))
}

/// `P_B(c, z) = ∫_B G_B(c, y) j(|y - z|) dy` from the ball centre, `d = 1`.
pub fn poisson_kernel_quadrature(
    green: &BallGreen,
    kernel: &JumpKernel,
    z: &Point,
    opts: &QuadOptions,
) -> Result<f64> {
    let geom = &green.geom;
    if geom.dim() != 1 {
        return Err(Error::Unsupported("Poisson quadrature is implemented for d = 1".into()));
    }
    if geom.delta(z) >= 0.0 {
        return Err(Error::domain("poisson_kernel", "z must lie outside the closed ball"));
    }
    let c = geom.center.as_slice()[0];
    let r = geom.radius;
    let zs = z.as_slice()[0];
    let gap = (zs - c).abs() - r;
    let side = (zs - c).signum();
    let centre = geom.center;
    let mut total = 0.0;
    for (a, b) in [(c - r, c), (c, c + r)] {
        let q = tanh_sinh(
            |n: Node| {
                let dy = if a == c { n.dl } else { n.dr };
                let y = n.x;
                // distance to z, exact near the boundary facing z
                let near = if side > 0.0 && b == c + r {
                    n.dr
                } else if side < 0.0 && a == c - r {
                    n.dl
                } else {
                    f64::NAN
                };
                let dz = if near.is_nan() { (zs - y).abs() } else { gap + near };
                green.eval_dist(&centre, &Point::on_axis(1, y), dy) * kernel.j(dz)
            },
            a,
            b,
            opts,
        )?;
        total += q.value;
    }
    Ok(total)
}

/// Ratio `P_B(c, z)/(j(|z - c|)Φ(r))` as an empirical lower constant.
pub fn poisson_lower_check(
    spec: &BernsteinSpec,
    geom: &BallGeometry,
    z: &Point,
) -> Result<EstimateReport> {
    if geom.radius > 1.0 {
        return Err(Error::domain("poisson_lower_check", "estimate is stated for r <= 1"));
    }
    let green = BallGreen::new(spec, geom)?;
    let kernel = JumpKernel::new(spec, geom.dim());
    let p = poisson_kernel_quadrature(&green, &kernel, z, &QuadOptions::default())?;
    let dz = z.dist(&geom.center);
    let shape = kernel.j(dz) * spec.phi_cap(geom.radius)?;
    let ratio = p / shape;
    Ok(EstimateReport::new("poisson_lower_ratio", ratio)
        .detail("poisson", p)
        .detail("shape", shape)
        .detail("distance", dz)
        .with_verdict(Verdict::from_bool(ratio > 0.0 && ratio.is_finite())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_kronrod;
    use approx::assert_relative_eq;

    fn s04() -> BernsteinSpec {
        BernsteinSpec::stable(0.4).unwrap()
    }

    #[test]
    fn riesz_matches_time_integral() {
        // G(r) = ∫ s^{α-1}/Γ(α) (4πs)^{-1/2} e^{-r²/4s} ds, in u = ln s
        let a: f64 = 0.4;
        let q = gauss_kronrod(
            |u| {
                let s = u.exp();
                s.powf(a) / gamma(a) * (4.0 * PI * s).powf(-0.5) * (-0.25 / s).exp()
            },
            -12.0,
            400.0,
            &QuadOptions::default(),
        )
        .unwrap()
        .value;
        let g = free_green(&s04(), 1, 1.0).unwrap();
        assert_relative_eq!(g.exact.unwrap(), q, max_relative = 1e-8);
        let g2 = free_green(&s04(), 1, 2.0).unwrap();
        assert_relative_eq!(g2.exact.unwrap() / g.exact.unwrap(), 2f64.powf(-0.2), max_relative = 1e-13);
        assert!(free_green(&BernsteinSpec::stable(0.6).unwrap(), 1, 1.0).is_err());
    }

    #[test]
    fn ball_green_frozen_value() {
        // independent mpmath evaluation of κ|x-y|^{β-d}∫₀^w s^{a-1}(1+s)^{-1/2} ds
        let v = ball_green_stable(0.4, 1, 1.0, &Point::on_axis(1, 0.0), &Point::on_axis(1, 0.5)).unwrap();
        assert_relative_eq!(v, 0.411_245_676_628_566_3, max_relative = 1e-10);
    }

    #[test]
    fn ball_green_symmetry_and_boundary_decay() {
        let (x, y) = (Point::on_axis(1, -0.2), Point::on_axis(1, 0.7));
        let a = ball_green_stable(0.4, 1, 1.0, &x, &y).unwrap();
        let b = ball_green_stable(0.4, 1, 1.0, &y, &x).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
        let near = ball_green_stable(0.4, 1, 1.0, &x, &Point::on_axis(1, 1.0 - 1e-10)).unwrap();
        assert!(near < 1e-3);
        assert!(ball_green_stable(0.4, 1, 1.0, &x, &Point::on_axis(1, 1.5)).is_err());
    }

    #[test]
    fn envelope_cases() {
        let s = s04();
        let g = BallGeometry::centered(1, 1.0).unwrap();
        let e = ball_green_envelope(&s, &g, &Point::on_axis(1, 0.0), &Point::on_axis(1, 0.01)).unwrap();
        assert_relative_eq!(e.lower, s.phi_cap(0.01).unwrap() / 0.01, max_relative = 1e-14);
        let e = ball_green_envelope(&s, &g, &Point::on_axis(1, 0.0), &Point::on_axis(1, 1.0)).unwrap();
        assert_eq!(e.upper, 0.0);
        let big = BallGeometry::centered(1, 2.0).unwrap();
        assert!(ball_green_envelope(&s, &big, &Point::on_axis(1, 0.0), &Point::on_axis(1, 0.5)).is_err());
    }

    #[test]
    fn three_g_collapsed_and_membership() {
        let s = s04();
        let geom = BallGeometry::centered(1, 1.0).unwrap();
        let green = BallGreen::new(&s, &geom).unwrap();
        let (x, y) = (Point::on_axis(1, 0.1), Point::on_axis(1, 0.4));
        let t = three_g_check(&green, &x, &y, &x, &y).unwrap();
        assert_relative_eq!(t.ratio, green.eval(&x, &y), max_relative = 1e-14);
        let t = three_g_check(&green, &x, &y, &y, &Point::on_axis(1, 0.1001)).unwrap();
        assert!(t.in_er);
    }

    #[test]
    fn poisson_quadrature_matches_closed_form() {
        let s = s04();
        let geom = BallGeometry::centered(1, 1.0).unwrap();
        let green = BallGreen::new(&s, &geom).unwrap();
        let k = JumpKernel::new(&s, 1);
        for zz in [1.01, 2.0, -3.0, 40.0] {
            let z = Point::on_axis(1, zz);
            let q = poisson_kernel_quadrature(&green, &k, &z, &QuadOptions::default()).unwrap();
            let exact = stable_poisson_kernel(0.4, 1, 1.0, &Point::origin(1), &z).unwrap();
            assert_relative_eq!(q, exact, max_relative = 1e-7);
        }
    }

    struct PhiBeta(BernsteinSpec, f64);
    impl PairFunction for PhiBeta {
        fn value_at(&self, _x: &Point, _y: &Point, dist: f64) -> f64 {
            self.0.phi_cap0(dist).powf(self.1).min(1.0)
        }
    }

    #[test]
    fn key_integral_zero_and_symmetry() {
        struct Zero;
        impl PairFunction for Zero {
            fn value_at(&self, _: &Point, _: &Point, _: f64) -> f64 {
                0.0
            }
        }
        let s = s04();
        let geom = BallGeometry::centered(1, 0.25).unwrap();
        let green = BallGreen::new(&s, &geom).unwrap();
        let k = JumpKernel::new(&s, 1);
        let (x, w) = (Point::on_axis(1, -0.05), Point::on_axis(1, 0.1));
        let o = QuadOptions::default().with_rel_tol(1e-9);
        assert_eq!(key_integral(&green, &k, &Zero, &x, &w, &o).unwrap(), 0.0);
        let f = PhiBeta(s.clone(), 1.5);
        let a = key_integral(&green, &k, &f, &x, &w, &o).map_err(|e| e.to_string()).unwrap();
        let b = key_integral(&green, &k, &f, &w, &x, &o).unwrap();
        assert!(a > 0.0);
        assert_relative_eq!(a, b, max_relative = 1e-8);
    }
}
