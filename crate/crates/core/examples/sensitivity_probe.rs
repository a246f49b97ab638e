// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sensitivity of the adaptive policy to the decay weight and prior
//! strength, with a per-variant calibrated threshold.

use std::time::Instant;

use ara_cusum::{
    calibrate_threshold, monte_carlo, AllocatorPolicy, ModelParams, PriorConfig, SimulationConfig,
};

fn run_variant(label: &str, prior: PriorConfig) {
    let base = SimulationConfig {
        model: ModelParams::new(39, 0.01, 0.05, 3900).unwrap(),
        policy: AllocatorPolicy::Ara,
        prior,
        replications: 400,
        base_seed: 11,
        max_steps: 2000,
        target_arl0: 200.0,
        arl_tolerance: 10.0,
    };
    let t = Instant::now();
    let cal = calibrate_threshold(&base).unwrap();
    let mut cfg = base.clone();
    cfg.replications = 500;
    cfg.base_seed = 999;
    cfg.model = ModelParams::new(39, 0.01, 0.05, 3900)
        .unwrap()
        .with_hotspot_rate(0.025)
        .unwrap()
        .with_threshold(cal.threshold)
        .unwrap()
        .with_hotspots([0])
        .unwrap()
        .with_change_time(Some(1));
    let report = monte_carlo(&cfg).unwrap();
    println!(
        "{label}: h={:.3} arl0={:.1} -> arl1={:.3} sdrl={:.3} dp={:.3} ({:?})",
        cal.threshold,
        cal.achieved_arl0,
        report.arl,
        report.sdrl,
        report.detection_precision,
        t.elapsed()
    );
}

fn main() {
    // decay sweep at a=19.5
    for w in [0.01, 0.3, 0.6] {
        run_variant(
            &format!("w={w:<4} a=19.5"),
            PriorConfig::new(19.5, 1930.5, w).unwrap(),
        );
    }
    // prior strength sweep at w=0.3 (b keeps the prior mean at p)
    for a in [0.1, 1.0] {
        run_variant(
            &format!("w=0.3  a={a:<4}"),
            PriorConfig::new(a, 99.0 * a, 0.3).unwrap(),
        );
    }
}
