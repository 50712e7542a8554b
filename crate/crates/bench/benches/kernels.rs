use criterion::{criterion_group, criterion_main, Criterion};
use sbmlab_bench::{mixture, stable};
use sbmlab_core::green::{free_green, BallGeometry, BallGreen};
use sbmlab_core::levy_kernel::{jump_density_quadrature, JumpKernel};
use sbmlab_core::quadrature::QuadOptions;
use sbmlab_core::Point;
use std::hint::black_box;

fn jump_density(c: &mut Criterion) {
    let k = JumpKernel::new(&stable(), 3);
    c.bench_function("j closed form d=3", |b| b.iter(|| k.j(black_box(0.7))));
    let m = mixture();
    let opts = QuadOptions::default();
    c.bench_function("j quadrature mixture d=3", |b| {
        b.iter(|| jump_density_quadrature(&m, 3, black_box(0.7), &opts).unwrap())
    });
}

fn green(c: &mut Criterion) {
    let s = stable();
    c.bench_function("free green d=1", |b| b.iter(|| free_green(&s, 1, black_box(0.3)).unwrap()));
    let g = BallGreen::new(&s, &BallGeometry::centered(1, 1.0).unwrap()).unwrap();
    let (x, y) = (Point::on_axis(1, -0.2), Point::on_axis(1, 0.45));
    c.bench_function("ball green d=1", |b| b.iter(|| g.eval(black_box(&x), black_box(&y))));
}

criterion_group!(benches, jump_density, green);
criterion_main!(benches);
