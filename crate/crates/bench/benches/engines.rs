use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use strc_core::*;

fn weights() -> (WeightFunction, WeightFunction) {
    let iv = Interval::unit();
    (
        WeightFunction::polynomial(iv, vec![1.0, -0.5, 0.25]).unwrap(),
        WeightFunction::polynomial(iv, vec![0.0, 1.0]).unwrap(),
    )
}

fn matrices(c: &mut Criterion) {
    let (phi, psi) = weights();
    let q = QuadratureConfig::default();
    let mut group = c.benchmark_group("coefficient_matrix");
    group.sample_size(10);
    for family in [BasisFamily::Legendre, BasisFamily::Fourier, BasisFamily::Haar] {
        for n in [32, 128] {
            let b = OrthonormalBasis::with_count(family, Interval::unit(), n).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{family:?}"), n), &n, |bench, &n| {
                bench.iter(|| coefficient_matrix(&phi, &psi, &b, black_box(n), &q).unwrap())
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("coefficient_diagonal");
    group.sample_size(10);
    let b = OrthonormalBasis::legendre(Interval::unit(), 511);
    group.bench_function("legendre/512", |bench| {
        bench.iter(|| coefficient_diagonal(&phi, &psi, &b, black_box(512), &q).unwrap())
    });
    group.finish();
}

fn tensors(c: &mut Criterion) {
    let (phi, psi) = weights();
    let q = QuadratureConfig::default();
    let mut group = c.benchmark_group("tensor_coefficients");
    group.sample_size(10);
    for n in [8, 16] {
        let b = OrthonormalBasis::legendre(Interval::unit(), n - 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, &n| {
            bench.iter(|| tensor_coefficients(&phi, &psi, &phi, &b, black_box(n), &q).unwrap())
        });
    }
    group.finish();
}

fn campaigns(c: &mut Criterion) {
    let one = WeightFunction::constant(Interval::unit(), 1.0);
    let q = QuadratureConfig::default();
    let b = OrthonormalBasis::legendre(Interval::unit(), 63);
    let mut cfg = McConfig::new(10_000, 1);
    cfg.oracle_paths = 0;
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("expansion/N=64/10k", |bench| {
        bench.iter(|| mc_campaign(&one, &one, &b, 64, black_box(&cfg), &q).unwrap())
    });
    group.bench_function("brownian/mesh=1024/1k", |bench| {
        bench.iter(|| brownian_midpoint_oracle(&one, &one, 1024, black_box(1), 1000, &q).unwrap())
    });
    group.finish();
}

criterion_group!(benches, matrices, tensors, campaigns);
criterion_main!(benches);
