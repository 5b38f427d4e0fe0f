use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pcadp_core::dpmech::privatize;
use pcadp_core::matrix::{gram_rows, sym_eigen};
use pcadp_core::pca::{fit, inverse, reduce};
use pcadp_core::{Matrix, NoiseStream, PrivacyParams};

fn pseudo_random(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut state = seed;
    let data = (0..rows * cols)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
        .collect();
    Matrix::new(rows, cols, data).unwrap()
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eigen");
    for n in [16, 64, 100] {
        let s = gram_rows(&pseudo_random(n, n, n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| sym_eigen(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn pca_batch(c: &mut Criterion) {
    // one MNIST-sized batch: 100 images of 28x28
    let batch = pseudo_random(100, 784, 7);
    c.bench_function("fit 100x784", |b| b.iter(|| fit(black_box(&batch)).unwrap()));

    let model = fit(&batch).unwrap();
    let mut group = c.benchmark_group("inverse 100x784");
    group.sample_size(20);
    for d in [10, 50, 99] {
        let red = reduce(&model, &batch, d).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &red, |b, red| {
            b.iter(|| inverse(&model, black_box(red), 1e-6).unwrap())
        });
    }
    group.finish();

    let red = reduce(&model, &batch, 20).unwrap();
    let params = PrivacyParams::new(5.0, 20);
    c.bench_function("privatize 100x20", |b| {
        b.iter(|| privatize(black_box(&red), &params, &mut NoiseStream::new(0, 0)).unwrap())
    });
}

criterion_group!(benches, eigen, pca_batch);
criterion_main!(benches);
