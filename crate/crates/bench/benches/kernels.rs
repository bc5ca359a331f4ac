use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use blwp_core::grid::laplacian;
use blwp_core::model::bump_data;
use blwp_core::stepper::step;
use blwp_core::testfn::term_bundle;
use blwp_core::{CutoffSpec, Field, Grid, InitialData, Params, State};

fn bench_laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian");
    for (dim, points) in [(1, 4096), (2, 256), (3, 64)] {
        let grid = Grid::new(dim, points, 16.0).unwrap();
        let f = bump_data(&grid, 1.0, &vec![0.0; dim], 4.0).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), points), &f, |b, f| b.iter(|| laplacian(black_box(f))));
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for (dim, points) in [(1, 4096), (2, 256)] {
        let grid = Grid::new(dim, points, 16.0).unwrap();
        let data = InitialData::new(Field::zeros(&grid), bump_data(&grid, 1.0, &vec![0.0; dim], 4.0).unwrap()).unwrap();
        let state = State::initial(&data);
        let params = Params::new(dim, 2.0, 0.0, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), points), &state, |b, s| {
            b.iter(|| step(black_box(s), &params, 1e-3).unwrap())
        });
    }
    group.finish();
}

fn bench_term_bundle(c: &mut Criterion) {
    let params = Params::new(1, 2.0, -3.0, 1.0).unwrap();
    let spec = CutoffSpec::for_exponent(2.0, 2.0, 64.0).unwrap();
    c.bench_function("term_bundle", |b| b.iter(|| term_bundle(black_box(&spec), &params).unwrap()));
}

criterion_group!(benches, bench_laplacian, bench_step, bench_term_bundle);
criterion_main!(benches);
