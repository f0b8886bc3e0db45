use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gaslab_bench::{grid, world};
use gaslab_core::app::pseudo_hash;
use gaslab_core::harness::run_scenario;
use gaslab_core::{AppVersion, CallRequest, Pattern};

fn full_grid(c: &mut Criterion) {
    let config = grid(100);
    c.bench_function("grid 3x3x3x100", |b| b.iter(|| run_scenario(black_box(&config)).unwrap()));
}

fn single_calls(c: &mut Criterion) {
    let mut group = c.benchmark_group("addFile");
    for pattern in Pattern::ALL {
        let base = world(pattern, AppVersion::V3);
        let name = "a-document-name-long-enough-for-two-words";
        let call = CallRequest::add_file(name, pseudo_hash(name, 1));
        group.bench_with_input(BenchmarkId::from_parameter(pattern), &call, |b, call| {
            b.iter_batched(|| base.clone(), |mut w| w.call(call), criterion::BatchSize::SmallInput)
        });
    }
    group.finish();
}

criterion_group!(benches, full_grid, single_calls);
criterion_main!(benches);
