// SPDX-License-Identifier: MIT OR Apache-2.0

//! Rough wall-clock probe of the hot paths (run with --release).

use std::time::Instant;

use ara_cusum::{
    calibrate_threshold, greedy_allocate, monte_carlo, posterior_init, posterior_update,
    AllocationVector, AllocatorPolicy, ModelParams, ObservationBatch, PriorConfig,
    SimulationConfig,
};

fn main() {
    let prior = PriorConfig::new(19.5, 1930.5, 0.3).unwrap();
    let mut posterior = posterior_init(&prior, 39);
    // a day of uneven data so regions differ
    let tests = vec![100u32; 39];
    let positives: Vec<u32> = (0..39).map(|k| (k % 5) as u32).collect();
    let batch = ObservationBatch::new(
        1,
        AllocationVector::new(tests, 3900).unwrap(),
        positives,
    )
    .unwrap();
    posterior = posterior_update(&posterior, &batch, &prior).unwrap();

    let t = Instant::now();
    let rounds = 2000;
    let mut sink = 0u32;
    for _ in 0..rounds {
        let a = greedy_allocate(&posterior, 3900).unwrap();
        sink = sink.wrapping_add(a.counts()[0]);
    }
    println!(
        "greedy_allocate k39 c3900 (cold): {:?}/call (sink {sink})",
        t.elapsed() / rounds
    );

    let base = SimulationConfig {
        model: ModelParams::new(39, 0.01, 0.025, 3900)
            .unwrap()
            .with_threshold(6.5)
            .unwrap(),
        policy: AllocatorPolicy::Ara,
        prior,
        replications: 20,
        base_seed: 1,
        max_steps: 2000,
        target_arl0: 200.0,
        arl_tolerance: 10.0,
    };

    let t = Instant::now();
    let cal = calibrate_threshold(&base).unwrap();
    println!(
        "ARA in-control calibration 20 reps x 2000 days: {:?} -> h={:.3} arl0={:.2}",
        t.elapsed(),
        cal.threshold,
        cal.achieved_arl0
    );

    let mut even = base.clone();
    even.policy = AllocatorPolicy::Even;
    let t = Instant::now();
    let cal_even = calibrate_threshold(&even).unwrap();
    println!(
        "Even in-control calibration 20 reps x 2000 days: {:?} -> h={:.3} arl0={:.2}",
        t.elapsed(),
        cal_even.threshold,
        cal_even.achieved_arl0
    );

    let mut oc = base.clone();
    oc.model = oc.model.with_hotspots([0]).unwrap().with_change_time(Some(0));
    oc.model = oc.model.with_threshold(cal.threshold).unwrap();
    oc.replications = 200;
    let t = Instant::now();
    let report = monte_carlo(&oc).unwrap();
    println!(
        "ARA out-of-control monte carlo 200 reps: {:?} -> arl1={:.3} dp={:.3} sdrl={:.3}",
        t.elapsed(),
        report.arl,
        report.detection_precision,
        report.sdrl
    );
}
