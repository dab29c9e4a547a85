use criterion::{black_box, criterion_group, criterion_main, Criterion};

use feller_core::approx::{mollify, truncated_samples, Regularized};
use feller_core::formbound::estimate_beta;
use feller_core::{evolve, DriftField, Grid, GridSpec, ScalarState};

fn hardy() -> DriftField {
    DriftField::hardy(1.0, 3).unwrap().scaled(0.1).unwrap()
}

fn form_bound(c: &mut Criterion) {
    let grid = Grid::build(GridSpec::RadialLog { d: 3, r_min: 1e-3, r_max: 50.0, n: 4096 }).unwrap();
    let b = truncated_samples(&DriftField::hardy(1.0, 3).unwrap(), 1 << 24, &grid, 0.0).unwrap();
    c.bench_function("estimate_beta/radial_log_4096", |bench| {
        bench.iter(|| estimate_beta(black_box(&b), &grid, 1e-8, 200_000, 7).unwrap().beta_hat)
    });
}

fn steps(c: &mut Criterion) {
    let radial = Grid::build(GridSpec::Radial { d: 3, r_max: 8.0, n: 2048 }).unwrap();
    let src = Regularized::new(hardy(), 16);
    let f = ScalarState::new(0.0, radial.sample(|_, r| (-4.0 * r * r).exp()));
    c.bench_function("evolve/radial_2048_x100", |bench| {
        bench.iter(|| evolve(&src, &radial, 0.0, 0.1, black_box(&f), 1e-3, None).unwrap())
    });

    let tensor = Grid::build(GridSpec::Tensor3 { half_width: 3.0, n: 32 }).unwrap();
    let f = ScalarState::new(0.0, tensor.sample(|_, r| (-4.0 * r * r).exp()));
    let mut group = c.benchmark_group("evolve");
    group.sample_size(10);
    group.bench_function("tensor3_32_x5", |bench| {
        bench.iter(|| evolve(&src, &tensor, 0.0, 0.05, black_box(&f), 1e-2, None).unwrap())
    });
    group.finish();
}

fn mollifier(c: &mut Criterion) {
    let field = hardy();
    let radial = Grid::build(GridSpec::Radial { d: 3, r_max: 8.0, n: 2048 }).unwrap();
    c.bench_function("mollify/radial_2048_m16", |bench| {
        bench.iter(|| mollify(black_box(&field), 16, &radial, 0.0, None).unwrap())
    });
    let tensor = Grid::build(GridSpec::Tensor3 { half_width: 3.0, n: 32 }).unwrap();
    let mut group = c.benchmark_group("mollify");
    group.sample_size(10);
    group.bench_function("tensor3_32_m8", |bench| bench.iter(|| mollify(black_box(&field), 8, &tensor, 0.0, None).unwrap()));
    group.finish();
}

criterion_group!(kernels, form_bound, steps, mollifier);
criterion_main!(kernels);
