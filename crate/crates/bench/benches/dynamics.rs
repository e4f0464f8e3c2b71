use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mqs_core::evolve::evolve_with_kernels;
use mqs_core::{coherent_state, rotation_to_x, Basis, SectorLabel};

fn rotation(c: &mut Criterion) {
    let mut group = c.benchmark_group("rotation_to_x");
    for n in [16u32, 64, 256, 1024] {
        let sector = SectorLabel::symmetric(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &sector, |b, &s| {
            b.iter(|| rotation_to_x(black_box(s)))
        });
    }
    group.finish();
}

fn evolution(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    for n in [16u32, 64, 256] {
        let state = coherent_state(SectorLabel::symmetric(n).unwrap(), 1.2, 0.4).unwrap();
        group.bench_with_input(BenchmarkId::new("lz", n), &state, |b, s| {
            b.iter(|| evolve_with_kernels(s, black_box(100.0), 1e-3, 1e-6))
        });
        let rho = evolve_with_kernels(&state, 100.0, 1e-3, 1e-6);
        group.bench_with_input(BenchmarkId::new("to_lx", n), &rho, |b, r| {
            b.iter(|| r.to_basis(Basis::Lx))
        });
    }
    group.finish();
}

criterion_group!(benches, rotation, evolution);
criterion_main!(benches);
