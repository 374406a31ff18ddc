use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rotpatch::multi::MultiConfig;
use rotpatch::{
    eval_outer_map, evolve, residual_multi, residual_single, DistanceCoefficient, EvolveOptions, FourierBoundary,
    PatchSource, PatchState, Problem, SinglePatchProblem,
};

fn velocity(c: &mut Criterion) {
    let mut g = c.benchmark_group("residual_single");
    for m in [128usize, 256, 512] {
        let b = FourierBoundary::new(0.3, 0.01, vec![0.0; 15]).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |bench, &m| {
            bench.iter(|| residual_single(black_box(&b), m).unwrap())
        });
    }
    g.finish();
}

fn jacobian(c: &mut Criterion) {
    let p = SinglePatchProblem::new(0.3, 0.01, 16, 256).unwrap();
    let x = vec![0.0; p.dim()];
    c.bench_function("fd_jacobian_n16_m256", |b| {
        b.iter(|| rotpatch::solver::fd_jacobian(&p, black_box(&x), 1e-6).unwrap())
    });
}

fn multi(c: &mut Criterion) {
    let (q, mu, r0) = (0.3, 1.0, 0.05);
    let cfg = MultiConfig::new(
        q,
        mu,
        [r0, 0.25 * r0 * r0, 0.25 * r0 * r0],
        [0.0, 0.0],
        &[0.0, 0.0],
        [vec![0.0; 6], vec![0.0; 6]],
        DistanceCoefficient::KirchhoffRouth.value(q, mu),
    )
    .unwrap();
    c.bench_function("residual_multi_m128", |b| b.iter(|| residual_multi(black_box(&cfg), 128).unwrap()));
}

fn rk4(c: &mut Criterion) {
    let eps = 0.01;
    let b = FourierBoundary::new(0.3, eps, vec![0.0; 15]).unwrap();
    let src = PatchSource::new(eval_outer_map(&b, 256).unwrap(), 1.0 / (std::f64::consts::PI * eps * eps)).unwrap();
    let state = PatchState::new(vec![src]).unwrap();
    let omega = 0.91 / (4.0 * std::f64::consts::PI * eps * eps);
    let opts = EvolveOptions::new(0.01 / omega, 0.01 / omega);
    c.bench_function("rk4_step_m256", |bench| bench.iter(|| evolve(black_box(&state), &opts).unwrap()));
}

criterion_group!(benches, velocity, jacobian, multi, rk4);
criterion_main!(benches);
