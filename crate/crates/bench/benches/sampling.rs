use criterion::{criterion_group, criterion_main, Criterion};
use sbmlab_bench::stable;
use sbmlab_core::rng::replica_rng;
use sbmlab_core::sampler::{exact_sbm, sample_sbm_path, PathParams, SubordinatorSampler};
use sbmlab_core::Point;

fn exact(c: &mut Criterion) {
    let s = stable();
    let x = Point::origin(3);
    let mut rng = replica_rng(1, 0);
    c.bench_function("exact sbm marginal d=3", |b| b.iter(|| exact_sbm(&s, &x, 1.0, &mut rng).unwrap()));
}

fn paths(c: &mut Criterion) {
    let s = stable();
    let params = PathParams { horizon: 1.0, cutoff: 1e-6, grid_step: f64::INFINITY };
    let sampler = SubordinatorSampler::new(&s, params.cutoff).unwrap();
    let mut rep = 0;
    c.bench_function("jump path t=1 cutoff 1e-6", |b| {
        b.iter(|| {
            rep += 1;
            sample_sbm_path(&sampler, Point::origin(1), &params, 7, rep)
        })
    });
}

criterion_group!(benches, exact, paths);
criterion_main!(benches);
