use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nipso_bench::{wide_spec, CPSO};
use nipso_core::simulation::simulate_recurrence;
use nipso_core::stability::{matrix_b, spectral_radius, summarize};
use nipso_core::variants::cpso_spec;
use nipso_core::{fixed_point, full_report, RecurrenceRun};

fn criteria(c: &mut Criterion) {
    let spec = wide_spec(16);
    c.bench_function("full_report_16_informers", |b| {
        b.iter(|| full_report(black_box(&spec)))
    });
    let b_mat = matrix_b(&summarize(&spec));
    c.bench_function("spectral_radius_b", |b| {
        b.iter(|| spectral_radius(black_box(&b_mat)))
    });
    c.bench_function("fixed_point", |b| b.iter(|| fixed_point(black_box(&spec))));
}

fn monte_carlo(c: &mut Criterion) {
    let run = RecurrenceRun::new(cpso_spec(&CPSO, (0.0, 1.0)).unwrap(), 500, 1000, 1);
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.bench_function("cpso_1000x500", |b| {
        b.iter(|| simulate_recurrence(black_box(&run)))
    });
    group.finish();
}

criterion_group!(benches, criteria, monte_carlo);
criterion_main!(benches);
