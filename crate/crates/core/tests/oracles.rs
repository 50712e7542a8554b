//! Frozen reference values computed independently with mpmath at 30 digits.

use approx::assert_relative_eq;
use sbmlab_core::functionals::{expected_functional_mc, Functional, McParams};
use sbmlab_core::levy_kernel::*;
use sbmlab_core::quadrature::QuadOptions;
use sbmlab_core::sampler::*;
use sbmlab_core::*;

fn mixture() -> BernsteinSpec {
    BernsteinSpec::mixture(&[(0.5, 0.3), (0.5, 0.45)]).unwrap()
}

#[test]
fn stable_jump_constants() {
    assert_relative_eq!(stable_jump_constant(1, 0.4), 0.281958452999990379, max_relative = 1e-13);
    assert_relative_eq!(stable_jump_constant(3, 0.75), 0.119050567376701818, max_relative = 1e-13);
}

#[test]
fn mixture_jump_density_by_quadrature() {
    let s = mixture();
    for (r, v) in [
        (0.1, 479.780150913829481),
        (1.0, 0.0750143508950204680),
        (10.0, 1.31145197469984577e-5),
    ] {
        let q = jump_density_quadrature(&s, 3, r, &QuadOptions::default()).unwrap();
        assert_relative_eq!(q, v, max_relative = 1e-8);
    }
}

#[test]
fn mixture_laplace_exponent() {
    let s = mixture();
    assert_relative_eq!(s.phi(0.01).unwrap(), 0.188540592165187366, max_relative = 1e-13);
    assert_relative_eq!(s.phi(4.0).unwrap(), 1.69089127479200646, max_relative = 1e-13);
}

#[test]
fn kato_integral_of_phi_power() {
    let s = BernsteinSpec::stable(0.4).unwrap();
    let k = kato_integral(&s, &RadialProfile::PhiPower { beta: 1.5 }).unwrap();
    assert_relative_eq!(k.value, 2.5, max_relative = 1e-8);
    assert_eq!(k.verdict, Finiteness::Finite);
}

#[test]
fn radial_rate_of_phi_power() {
    let s = BernsteinSpec::stable(0.4).unwrap();
    let k = JumpKernel::new(&s, 1);
    let c = radial_rate(&s, &k, &RadialProfile::PhiPower { beta: 1.5 }, &QuadOptions::default()).unwrap();
    assert_relative_eq!(c, 2.11468839749992784, max_relative = 1e-8);
}

#[test]
fn exit_overshoot_exact_law() {
    assert_relative_eq!(stable_overshoot_probability(0.4, 1.0, 4.0), 0.251490183745562378, max_relative = 1e-10);
    assert_relative_eq!(stable_overshoot_probability(0.4, 0.25, 1.0), 0.251490183745562378, max_relative = 1e-10);
}

#[test]
fn overshoot_mc_matches_exact_law() {
    let s = BernsteinSpec::stable(0.4).unwrap();
    let p = ProbeParams { n: 20_000, seed: 3, ..ProbeParams::default() };
    let r = exit_overshoot_probe(&s, 1, 1.0, 4.0, &p).unwrap();
    assert!(r.z_score().unwrap() < 4.0, "{r:?}");
}

#[test]
fn jump_displacement_variance_is_twice_subordinator_jump() {
    let s = BernsteinSpec::stable(0.4).unwrap();
    let sampler = SubordinatorSampler::new(&s, 1e-3).unwrap();
    let params = PathParams { horizon: 5.0, cutoff: 1e-3, grid_step: f64::INFINITY };
    let mut ratios = Vec::new();
    for rep in 0..200 {
        let path = sample_sbm_path(&sampler, Point::origin(3), &params, 9, rep);
        for j in &path.jumps {
            ratios.push(j.pre.dist(&j.post).powi(2) / (3.0 * 2.0 * j.sub_jump));
        }
    }
    // each ratio is chi-squared(3)/3
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    assert!(n > 1000.0);
    assert!((mean - 1.0).abs() < 4.0 * (2.0 / 3.0 / n).sqrt(), "mean {mean} over {n} jumps");
}

#[test]
fn levy_system_mean_is_linear_in_time() {
    let s = BernsteinSpec::stable(0.4).unwrap();
    let f = Functional::radial(&s, 1, RadialProfile::PhiPower { beta: 1.5 }, 1.0).unwrap();
    let mc = McParams { n: 20_000, seed: 5, cutoff: 1e-10, grid_step: f64::INFINITY };
    let a = expected_functional_mc(&f, &Point::origin(1), 0.05, &mc).unwrap();
    let b = expected_functional_mc(&f, &Point::origin(1), 0.1, &mc).unwrap();
    let joint = (4.0 * a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((2.0 * a.estimate - b.estimate).abs() < 3.0 * joint, "{a:?} {b:?}");
}
