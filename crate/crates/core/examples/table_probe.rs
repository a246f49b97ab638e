// SPDX-License-Identifier: MIT OR Apache-2.0

//! Benchmark-grid probe: one threshold per policy (detector designed at
//! q=0.05, calibrated in control to ARL0=200), then out-of-control run
//! lengths as the true hotspot rate sweeps the table columns.

use std::time::Instant;

use ara_cusum::{
    calibrate_threshold, monte_carlo, AllocatorPolicy, ModelParams, PriorConfig, SimulationConfig,
};

fn main() {
    let truths = [0.025, 0.03, 0.04, 0.05];
    let policies = [
        AllocatorPolicy::Ara,
        AllocatorPolicy::Even,
        AllocatorPolicy::top_r_default(),
    ];
    let prior = PriorConfig::new(19.5, 1930.5, 0.3).unwrap();

    for policy in policies {
        let base = SimulationConfig {
            model: ModelParams::new(39, 0.01, 0.05, 3900).unwrap(),
            policy,
            prior,
            replications: 400,
            base_seed: 11,
            max_steps: 2000,
            target_arl0: 200.0,
            arl_tolerance: 10.0,
        };
        let t = Instant::now();
        let cal = calibrate_threshold(&base).unwrap();
        println!(
            "policy {:>5}: h={:.4} arl0={:.1} ({:?})",
            policy.name(),
            cal.threshold,
            cal.achieved_arl0,
            t.elapsed()
        );
        for &truth in &truths {
            let mut cfg = base.clone();
            cfg.replications = 500;
            cfg.base_seed = 999;
            cfg.model = ModelParams::new(39, 0.01, 0.05, 3900)
                .unwrap()
                .with_hotspot_rate(truth)
                .unwrap()
                .with_threshold(cal.threshold)
                .unwrap()
                .with_hotspots([0])
                .unwrap()
                .with_change_time(Some(1));
            let report = monte_carlo(&cfg).unwrap();
            println!(
                "  truth={truth:.3} -> arl1={:.3} sdrl={:.3} dp={:.3} trunc={}",
                report.arl, report.sdrl, report.detection_precision, report.truncation_count
            );
        }
    }
}
