use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geoconvex::problems::{generate_spd_dataset, Normalization};
use geoconvex::{Hyperbolic, Manifold};
use nalgebra::DVector;

fn hyperbolic(c: &mut Criterion) {
    let mut group = c.benchmark_group("hyperbolic");
    for dim in [3, 50] {
        let m = Hyperbolic::new(dim, -1.0).unwrap();
        let x = m
            .point_from_spatial(DVector::from_fn(dim, |i, _| (i as f64 * 0.7).sin()))
            .unwrap();
        let y = m
            .point_from_spatial(DVector::from_fn(dim, |i, _| (i as f64 * 1.3).cos()))
            .unwrap();
        let v = m.log_map(&x, &y).unwrap();
        group.bench_with_input(BenchmarkId::new("exp", dim), &dim, |b, _| {
            b.iter(|| m.exp_map(black_box(&x), black_box(&v)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("log", dim), &dim, |b, _| {
            b.iter(|| m.log_map(black_box(&x), black_box(&y)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("transport", dim), &dim, |b, _| {
            b.iter(|| {
                m.parallel_transport(black_box(&x), black_box(&y), black_box(&v))
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn spd(c: &mut Criterion) {
    let mut group = c.benchmark_group("spd");
    for n in [5, 20] {
        let p = generate_spd_dataset(n, 2, 100.0, 1, Normalization::Spectral).unwrap();
        let m = *p.manifold();
        let (x, y) = (&p.matrices()[0], &p.matrices()[1]);
        let v = m.log_map(x, y).unwrap();
        group.bench_with_input(BenchmarkId::new("exp", n), &n, |b, _| {
            b.iter(|| m.exp_map(black_box(x), black_box(&v)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("log", n), &n, |b, _| {
            b.iter(|| m.log_map(black_box(x), black_box(y)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("transport", n), &n, |b, _| {
            b.iter(|| {
                m.parallel_transport(black_box(x), black_box(y), black_box(&v))
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn karcher(c: &mut Criterion) {
    let p = generate_spd_dataset(20, 100, 100.0, 1, Normalization::Spectral).unwrap();
    let x = p.arithmetic_mean().unwrap();
    c.bench_function("karcher/full_gradient", |b| {
        b.iter(|| p.full_gradient(black_box(&x)).unwrap())
    });
    c.bench_function("karcher/sample_gradient", |b| {
        b.iter(|| p.sample_gradient(black_box(&x), 7).unwrap())
    });
}

criterion_group!(benches, hyperbolic, spd, karcher);
criterion_main!(benches);
