use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use wavegame::games::{design_ec, worst_case_tir};
use wavegame::harness::analysis::psd_linear;
use wavegame::solvers::ball::{min_quad_ball, trs_dual};
use wavegame::solvers::eig::herm_eig;
use wavegame::{detection_probability, lfm_reference};
use wavegame_bench::{hermitian, reference, vector};

fn linear_algebra(c: &mut Criterion) {
    let h = hermitian(32, 0.0);
    c.bench_function("herm_eig 32x32", |b| b.iter(|| herm_eig(black_box(&h)).unwrap()));

    let u = hermitian(6, 8.0);
    let t0 = vector(6);
    c.bench_function("min_quad_ball 6", |b| {
        b.iter(|| min_quad_ball(black_box(&u), &t0, 0.5).unwrap())
    });
    let indefinite = hermitian(6, 0.0);
    c.bench_function("trs_dual 6 (conic)", |b| {
        b.iter(|| trs_dual(black_box(&indefinite), &t0, 0.5).unwrap())
    });
}

fn model(c: &mut Criterion) {
    let scn = reference(0.1);
    let s = lfm_reference(2, 16, 1.0);
    c.bench_function("worst_case_tir reference", |b| {
        b.iter(|| worst_case_tir(&scn, black_box(&s.s)).unwrap())
    });
    c.bench_function("psd 1024", |b| b.iter(|| psd_linear(black_box(&s), 2, 1024).unwrap()));
    c.bench_function("detection_probability", |b| {
        b.iter(|| detection_probability(black_box(20.0), 1e-6).unwrap())
    });
}

fn designs(c: &mut Criterion) {
    let mut g = c.benchmark_group("designs");
    g.sample_size(10);
    let scn = reference(0.3);
    g.bench_function("design_ec reference r=0.3", |b| {
        b.iter(|| design_ec(black_box(&scn), 1.0).unwrap())
    });
    g.finish();
}

criterion_group!(benches, linear_algebra, model, designs);
criterion_main!(benches);
