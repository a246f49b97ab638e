// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replays the bundled WA rate matrix over many seeds and tallies alarm
//! counties and dates.

use std::collections::BTreeMap;
use std::path::Path;

use ara_cusum::{load_rate_matrix, replay, AllocatorPolicy, ModelParams, ObservationMode, PriorConfig};

fn main() {
    let matrix = load_rate_matrix(Path::new("data/wa_rates_2020.csv")).unwrap();
    let model = ModelParams::new(39, 0.01, 0.05, 3900)
        .unwrap()
        .with_threshold(6.5)
        .unwrap();
    let prior = PriorConfig::new(19.5, 1930.5, 0.3).unwrap();

    let mut by_region: BTreeMap<String, usize> = BTreeMap::new();
    let mut dates: Vec<String> = Vec::new();
    let mut none = 0usize;
    for seed in 0..100u64 {
        let report = replay(
            &matrix,
            &model,
            &AllocatorPolicy::Ara,
            &prior,
            seed,
            ObservationMode::Sampled,
        )
        .unwrap();
        match report.alarm {
            Some(alarm) => {
                *by_region.entry(alarm.region_name.clone()).or_default() += 1;
                dates.push(alarm.date.to_string());
            }
            None => none += 1,
        }
    }
    dates.sort();
    println!("alarms by county: {by_region:?} (none: {none})");
    if !dates.is_empty() {
        println!(
            "alarm dates: min {} / median {} / max {}",
            dates[0],
            dates[dates.len() / 2],
            dates[dates.len() - 1]
        );
    }
}
