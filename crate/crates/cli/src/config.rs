//! Experiment configuration files.

use std::path::PathBuf;

use sbmlab_core::functionals::FunctionalSpec;
use sbmlab_core::quadrature::QuadOptions;
use sbmlab_core::BernsteinSpec;
use serde::{Deserialize, Serialize};

/// Experiment catalog: name and one-line description.
pub const CATALOG: &[(&str, &str)] = &[
    ("verify-scaling", "weak scaling sandwich of the Laplace exponent on a (lambda, x) grid"),
    ("verify-j", "jump density by quadrature against the closed form and its bound shape"),
    ("kato", "Kato integral of the functional envelope"),
    ("key-integral", "log-log slope of the conditioned key integral over shrinking balls"),
    ("threeg", "3G constant calibration and validation on disjoint seeds"),
    ("overshoot", "exit overshoot probability and the stability of its constant across scales"),
    ("annulus", "probability that the exit from B(0,R) lands in the annulus up to M R"),
    ("levy-system", "Monte Carlo jump sum against the Levy-system rate"),
    ("gauge", "gauge function E_x exp(-A_inf) with a two-sided bracket"),
    ("harnack", "gauge ratio spread over scaled annulus probe points"),
    ("counterexample", "divergent Green potential partial sums and ball hitting frequencies"),
    ("entropy", "Doleans-Dade martingale, F^2 identity and relative entropy"),
    ("entropy-counterexample", "F^2 expectation under horizon doubling and square-integrability report"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// Output subdirectory name; defaults to `seed-<seed>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    pub spec: BernsteinSpec,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalSpec>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_dim() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

fn default_n() -> usize {
    10_000
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n: default_n(),
            seed: None,
            horizon: None,
            cutoff: None,
            grid_step: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_rel_tol() -> f64 {
    1e-8
}

fn default_budget() -> usize {
    10_000_000
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: default_rel_tol(),
            budget: default_budget(),
        }
    }
}

impl QuadConfig {
    pub fn options(&self) -> QuadOptions {
        QuadOptions {
            max_evals: self.budget,
            ..QuadOptions::default().with_rel_tol(self.rel_tol)
        }
    }
}

/// Experiment-specific knobs; each experiment documents which it reads.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Start point on the first axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Time horizon of fixed-time estimators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_slope: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Vec<String>> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| vec![format!("config: {e}")])?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level range checks.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, msg: &str| {
            if !ok {
                errs.push(format!("{field}: {msg}"));
            }
        };
        check(
            CATALOG.iter().any(|(n, _)| *n == self.experiment),
            "experiment",
            &format!("unknown experiment '{}' (see `sbmlab list`)", self.experiment),
        );
        check((1..=8).contains(&self.d), "d", "must be between 1 and 8");
        check(self.mc.n >= 2, "mc.n", "must be at least 2");
        let pos = |v: Option<f64>| v.is_none_or(|v| v > 0.0 && v.is_finite());
        let pos_or_inf = |v: Option<f64>| v.is_none_or(|v| v > 0.0);
        check(pos(self.mc.horizon), "mc.horizon", "must be positive and finite");
        check(pos(self.mc.cutoff), "mc.cutoff", "must be positive and finite");
        check(pos_or_inf(self.mc.grid_step), "mc.grid_step", "must be positive");
        check(
            self.quadrature.rel_tol > 0.0 && self.quadrature.rel_tol < 1.0,
            "quadrature.rel_tol",
            "must lie in (0, 1)",
        );
        check(self.quadrature.budget >= 1000, "quadrature.budget", "must be at least 1000");
        let p = &self.params;
        check(p.x.is_none_or(f64::is_finite), "params.x", "must be finite");
        check(pos(p.t), "params.t", "must be positive and finite");
        check(pos(p.tolerance), "params.tolerance", "must be positive and finite");
        check(pos(p.eps_scale), "params.eps_scale", "must be positive and finite");
        check(pos(p.target_slope), "params.target_slope", "must be positive and finite");
        check(p.m.is_none_or(|m| m >= 2), "params.m", "must be at least 2");
        for (name, v) in [("params.radii", &p.radii), ("params.scales", &p.scales), ("params.horizons", &p.horizons)] {
            if let Some(v) = v {
                check(
                    !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[1] > w[0]),
                    name,
                    "must be a nonempty increasing list of positive numbers",
                );
            }
        }
        if let Some(pts) = &p.points {
            check(
                !pts.is_empty() && pts.iter().all(|x| x.is_finite()),
                "params.points",
                "must be a nonempty list of finite numbers",
            );
        }
        if let Some(tag) = &self.tag {
            check(
                !tag.is_empty() && tag.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && tag != "." && tag != "..",
                "tag",
                "must be a nonempty name of letters, digits, '-', '_' or '.'",
            );
        }
        if let Err(e) = self.spec.check_dimension(self.d) {
            errs.push(format!("d: {e}"));
        }
        if let Some(f) = &self.functional {
            if let Err(e) = f.build(&self.spec, self.d) {
                errs.push(format!("functional: {e}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}
