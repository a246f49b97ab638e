// SPDX-License-Identifier: MIT OR Apache-2.0

//! Maps the achievable in-control ARL plateaus of the Top-R policy, whose
//! zero-allocation freeze quantizes the record values.

use ara_cusum::{arl0_profile, AllocatorPolicy, ModelParams, PriorConfig, SimulationConfig};

fn main() {
    let cfg = SimulationConfig {
        model: ModelParams::new(39, 0.01, 0.05, 3900).unwrap(),
        policy: AllocatorPolicy::top_r_default(),
        prior: PriorConfig::new(19.5, 1930.5, 0.3).unwrap(),
        replications: 1000,
        base_seed: 11,
        max_steps: 2000,
        target_arl0: 200.0,
        arl_tolerance: 10.0,
    };
    let thresholds: Vec<f64> = (0..60).map(|i| 4.5 + 0.05 * i as f64).collect();
    let arls = arl0_profile(&cfg, &thresholds).unwrap();
    let mut last = f64::NEG_INFINITY;
    for (h, arl) in thresholds.iter().zip(&arls) {
        if (arl - last).abs() > 1e-9 {
            println!("h={h:.2} -> ARL0={arl:.1}");
            last = *arl;
        }
    }
}
