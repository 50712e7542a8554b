//! Property tests for scale functions, functionals and seeded sampling.

use proptest::prelude::*;
use sbmlab_core::functionals::*;
use sbmlab_core::girsanov::make_entropy_counterexample;
use sbmlab_core::levy_kernel::{PairFunction, RadialProfile};
use sbmlab_core::rng::run_replicas;
use sbmlab_core::sampler::*;
use sbmlab_core::*;

fn spec_strategy() -> impl Strategy<Value = BernsteinSpec> {
    prop_oneof![
        (0.1f64..0.95).prop_map(|a| BernsteinSpec::stable(a).unwrap()),
        (0.1f64..5.0, 0.1f64..0.5, 0.5f64..0.95)
            .prop_map(|(w, a, b)| BernsteinSpec::mixture(&[(w, a), (1.0, b)]).unwrap()),
    ]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn point_strategy(d: usize) -> impl Strategy<Value = Point> {
    proptest::collection::vec(-50.0f64..50.0, d).prop_map(|v| Point::from_slice(&v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scale_function_inverts_exponent(spec in spec_strategy(), ls in -6.0f64..6.0) {
        let s = 10f64.powf(ls);
        let v = spec.phi_cap(s).unwrap() * spec.phi(s.powi(-2)).unwrap();
        prop_assert!(rel_close(v, 1.0, 1e-12));
        prop_assert!(rel_close(spec.phi_cap0(s), spec.phi_cap(s).unwrap(), 1e-12));
    }

    #[test]
    fn scale_function_inverse_roundtrip(spec in spec_strategy(), ls in -4.0f64..4.0) {
        let s = 10f64.powf(ls);
        let back = spec.phi_cap_inv(spec.phi_cap(s).unwrap()).unwrap();
        prop_assert!(rel_close(back, s, 1e-9));
    }

    #[test]
    fn exponent_is_increasing(spec in spec_strategy(), ll in -6.0f64..6.0, step in 1e-3f64..2.0) {
        let l = 10f64.powf(ll);
        prop_assert!(spec.phi(l * (1.0 + step)).unwrap() > spec.phi(l).unwrap());
    }

    #[test]
    fn weak_scaling_sandwich(spec in spec_strategy(), lx in -6.0f64..6.0, llam in 0.0f64..6.0) {
        let (x, lam) = (10f64.powf(lx), 10f64.powf(llam));
        let q = spec.phi(lam * x).unwrap() / spec.phi(x).unwrap();
        let (a1, a2, d1, d2) = (spec.a1, spec.a2, spec.delta1, spec.delta2);
        prop_assert!(q >= a1 * lam.powf(d1) * (1.0 - 1e-12));
        prop_assert!(q <= a2 * lam.powf(d2) * (1.0 + 1e-12));
    }

    #[test]
    fn rescaling_composes(spec in spec_strategy(), lr in -2.0f64..2.0, ls in -2.0f64..2.0, ll in -3.0f64..3.0) {
        let (r, s, l) = (10f64.powf(lr), 10f64.powf(ls), 10f64.powf(ll));
        let twice = spec.rescale(r).unwrap().rescale(s).unwrap();
        let once = spec.rescale(r * s).unwrap();
        prop_assert!(rel_close(twice.phi(l).unwrap(), once.phi(l).unwrap(), 1e-10));
        prop_assert!(rel_close(spec.rescale(r).unwrap().phi(1.0).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn fuchsian_is_symmetric_and_vanishes_on_diagonal(
        spec in spec_strategy(),
        x in point_strategy(2),
        y in point_strategy(2),
        beta in 0.6f64..2.0,
        decay in 0.0f64..1.0,
    ) {
        let f = make_fuchsian_decayed(&spec, 2, beta, 0.7, decay).unwrap();
        prop_assert_eq!(f.value(&x, &y), f.value(&y, &x));
        prop_assert_eq!(f.value(&x, &x), 0.0);
        prop_assert!(f.value(&x, &y) >= 0.0);
    }

    #[test]
    fn fuchsian_envelope(
        x in point_strategy(1),
        y in point_strategy(1),
        alpha in 0.1f64..0.9,
        beta in 0.6f64..2.0,
        c in 0.01f64..3.0,
    ) {
        let spec = BernsteinSpec::stable(alpha).unwrap();
        let f = make_fuchsian(&spec, 1, beta, c).unwrap();
        let (cc, profile) = f.envelope();
        let v = f.value(&x, &y);
        prop_assert!(v <= cc * profile.value(&spec, x.dist(&y)) * (1.0 + 1e-12));
        let fuchs = c * spec.phi_cap0(x.dist(&y)).powf(beta)
            / (1.0 + spec.phi_cap0(x.norm()).powf(beta) + spec.phi_cap0(y.norm()).powf(beta));
        prop_assert!(v <= fuchs * (1.0 + 1e-12));
    }

    #[test]
    fn rescaled_fuchsian_envelope(
        x in point_strategy(1),
        y in point_strategy(1),
        lr in 0.0f64..3.0,
        beta in 0.6f64..2.0,
    ) {
        let spec = BernsteinSpec::mixture(&[(1.0, 0.3), (1.0, 0.45)]).unwrap();
        let r = 10f64.powf(lr);
        let f = make_fuchsian(&spec, 1, beta, 1.0).unwrap().scaled(r);
        let sr = spec.rescale(r).unwrap();
        prop_assume!(x.norm() >= 1.0 || y.norm() >= 1.0);
        let bound = sr.phi_cap0(x.dist(&y)).powf(beta);
        prop_assert!(f.value(&x, &y) <= bound * (1.0 + 1e-10));
        let direct = make_fuchsian(&spec, 1, beta, 1.0).unwrap().value(&x.scale(r), &y.scale(r));
        prop_assert!(rel_close(f.value(&x, &y), direct, 1e-12));
    }

    #[test]
    fn radial_functional_depends_on_distance_only(
        x in point_strategy(3),
        y in point_strategy(3),
        shift in point_strategy(3),
    ) {
        let spec = BernsteinSpec::stable(0.4).unwrap();
        let f = Functional::radial(&spec, 3, RadialProfile::PhiPower { beta: 1.5 }, 1.0).unwrap();
        let (xs, ys) = (x.offset(&shift, 1.0), y.offset(&shift, 1.0));
        prop_assert!(rel_close(f.value(&x, &y), f.value(&xs, &ys), 1e-9));
    }

    #[test]
    fn entropy_counterexample_envelope(k in 0usize..4, u in -1.0f64..1.0, w in -1.0f64..1.0) {
        let spec = BernsteinSpec::stable(0.4).unwrap();
        let (gamma, beta) = (0.2, 0.8);
        let f = make_entropy_counterexample(&spec, 1, gamma, beta, 4).unwrap();
        let ball = f.geometry().unwrap().ball(k);
        let c = ball.center.as_slice()[0];
        let x = Point::on_axis(1, c + u * ball.radius);
        let y = Point::on_axis(1, (c + u * ball.radius + 0.9 * w).clamp(c - ball.radius, c + ball.radius));
        let p = |s: f64| spec.phi_cap0(s);
        let bound = 0.5 * p(x.dist(&y)).powf(beta) / (1.0 + p(x.norm()).powf(gamma) + p(y.norm()).powf(gamma));
        prop_assert!(f.value(&x, &y) <= bound * (1.0 + 1e-12));
        prop_assert_eq!(f.value(&x, &y), f.value(&y, &x));
    }

    #[test]
    fn seeded_paths_are_reproducible(seed in any::<u64>(), rep in 0u64..1000) {
        let spec = BernsteinSpec::stable(0.6).unwrap();
        let sampler = SubordinatorSampler::new(&spec, 1e-2).unwrap();
        let params = PathParams { horizon: 1.0, cutoff: 1e-2, grid_step: 0.25 };
        let a = sample_sbm_path(&sampler, Point::origin(2), &params, seed, rep);
        let b = sample_sbm_path(&sampler, Point::origin(2), &params, seed, rep);
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }
}

#[test]
fn replicas_do_not_depend_on_scheduling() {
    let spec = BernsteinSpec::stable(0.5).unwrap();
    let draw = || run_replicas(77, 500, |_, rng| exact_sbm(&spec, &Point::origin(1), 1.0, rng).unwrap().norm());
    let a = draw();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(draw);
    assert_eq!(a, b);
}
