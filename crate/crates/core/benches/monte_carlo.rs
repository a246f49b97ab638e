// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo throughput: rayon-parallel replications against the
//! sequential path on the same configuration (identical outputs; only the
//! wall clock differs).

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ara_cusum::{
    monte_carlo, monte_carlo_sequential, AllocatorPolicy, ModelParams, PriorConfig,
    SimulationConfig,
};

fn config(policy: AllocatorPolicy) -> SimulationConfig {
    SimulationConfig {
        model: ModelParams::new(10, 0.01, 0.05, 1000)
            .unwrap()
            .with_threshold(4.0)
            .unwrap()
            .with_hotspots([0])
            .unwrap()
            .with_change_time(Some(0)),
        policy,
        prior: PriorConfig::new(5.0, 495.0, 0.3).unwrap(),
        replications: 64,
        base_seed: 2020,
        max_steps: 200,
        target_arl0: 50.0,
        arl_tolerance: 5.0,
    }
}

fn bench_monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for policy in [
        AllocatorPolicy::Ara,
        AllocatorPolicy::Even,
        AllocatorPolicy::TopR {
            num_batches: 5,
            top_r: 5,
        },
    ] {
        let cfg = config(policy);
        group.bench_function(format!("parallel_{}", policy.name()), |b| {
            b.iter(|| monte_carlo(black_box(&cfg)).unwrap())
        });
        group.bench_function(format!("sequential_{}", policy.name()), |b| {
            b.iter(|| monte_carlo_sequential(black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_monte_carlo);
criterion_main!(benches);
