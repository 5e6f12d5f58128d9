use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use surplusect_core::crofton::{run_clifford_trials_with, TrialOptions};
use surplusect_core::normals::{caustic_grid, SupportFunction};
use surplusect_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn clifford_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("clifford_trials_n2_2000");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, &execution| {
            b.iter(|| {
                let options = TrialOptions { execution, ..TrialOptions::default() };
                black_box(run_clifford_trials_with(2, 2000, 42, options).unwrap())
            })
        });
    }
    group.finish();
}

fn ellipse_grid(c: &mut Criterion) {
    let ellipse = SupportFunction::ellipsoid(&[2.0, 1.0]).unwrap();
    let mut group = c.benchmark_group("caustic_grid_51");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, &execution| {
            b.iter(|| black_box(caustic_grid(&ellipse, [-2.0, -1.0, 2.0, 1.0], 51, execution).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, clifford_trials, ellipse_grid);
criterion_main!(benches);
