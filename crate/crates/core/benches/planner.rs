// SPDX-License-Identifier: MIT OR Apache-2.0

//! Allocation benchmarks at the benchmark-study scale (39 regions, 3900
//! tests) and at a small scale where the enumeration oracle still runs.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use ara_cusum::{
    brute_force_allocate, greedy_allocate, posterior_init, posterior_update, AllocationVector,
    ObservationBatch, PosteriorState, PriorConfig,
};

/// A mildly asymmetric posterior: every region saw one day of data with a
/// different positive count.
fn skewed_posterior(num_regions: usize, tests_per_region: u32) -> PosteriorState {
    let prior = PriorConfig::new(19.5, 1930.5, 0.3).unwrap();
    let state = posterior_init(&prior, num_regions);
    let tests = vec![tests_per_region; num_regions];
    let budget = tests_per_region * num_regions as u32;
    let positives: Vec<u32> = (0..num_regions)
        .map(|k| (k as u32) % (tests_per_region / 10).max(1))
        .collect();
    let batch = ObservationBatch::new(
        1,
        AllocationVector::new(tests, budget).unwrap(),
        positives,
    )
    .unwrap();
    posterior_update(&state, &batch, &prior).unwrap()
}

fn bench_greedy(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy_allocate");
    let posterior = skewed_posterior(39, 100);
    group.bench_function("k39_c3900", |b| {
        b.iter(|| greedy_allocate(black_box(&posterior), black_box(3900)).unwrap())
    });
    let wide = skewed_posterior(200, 100);
    group.bench_function("k200_c20000", |b| {
        b.iter(|| greedy_allocate(black_box(&wide), black_box(20_000)).unwrap())
    });
    group.finish();
}

fn bench_brute_force(c: &mut Criterion) {
    let posterior = skewed_posterior(5, 20);
    c.bench_function("brute_force_k5_c12", |b| {
        b.iter_batched(
            || posterior.clone(),
            |p| brute_force_allocate(&p, 12).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_greedy, bench_brute_force);
criterion_main!(benches);
