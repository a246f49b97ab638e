// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replay of the monitoring loop over observed daily rates.
//!
//! The input is a strict CSV: header `date,<region_1>,...,<region_K>`, one
//! row per calendar day (contiguous, ascending), every cell a rate in
//! `[0, 1]`. Columns are region names (e.g. county names); dates are
//! metadata only, the engine runs on day indices.
//!
//! Each replayed day allocates tests under the configured policy and draws
//! `X_k ~ Bin(c_k, rate[day][k])` from the seeded stream — the model's own
//! observation channel driven by the recorded rates. A deterministic mode
//! (`X_k = round(c_k * rate)`) exists for smoke tests. As in simulation,
//! the first day seeds the posterior and monitoring starts on day 2.

use std::path::Path;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{check_alarm, cusum_step_with, CusumState, ModelParams, ObservationBatch};
use crate::planner::{curves_of, AllocationVector, GreedyPlanner};
use crate::policy::{allocate, even_allocation, AllocatorPolicy};
use crate::posterior::{posterior_init, posterior_update, PriorConfig};
use crate::sim::sample_binomial;

/// Validated day-by-region rate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    region_names: Vec<String>,
    dates: Vec<NaiveDate>,
    rates: Vec<Vec<f64>>, // [day][region]
}

impl RateMatrix {
    pub fn from_parts(
        region_names: Vec<String>,
        dates: Vec<NaiveDate>,
        rates: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if region_names.is_empty() {
            return Err(Error::invalid("region_names", "needs at least one region"));
        }
        if dates.is_empty() {
            return Err(Error::invalid("dates", "needs at least one day"));
        }
        if dates.len() != rates.len() {
            return Err(Error::invalid(
                "rates",
                format!("{} rows for {} dates", rates.len(), dates.len()),
            ));
        }
        for (i, row) in rates.iter().enumerate() {
            if row.len() != region_names.len() {
                return Err(Error::invalid(
                    "rates",
                    format!(
                        "row {} has {} entries, expected {}",
                        i + 1,
                        row.len(),
                        region_names.len()
                    ),
                ));
            }
            if let Some((k, &r)) = row
                .iter()
                .enumerate()
                .find(|(_, &r)| !(r.is_finite() && (0.0..=1.0).contains(&r)))
            {
                return Err(Error::invalid(
                    "rates",
                    format!("row {}, column {}: rate {r} outside [0, 1]", i + 1, k + 1),
                ));
            }
        }
        for (i, pair) in dates.windows(2).enumerate() {
            if pair[1] != pair[0].succ_opt().expect("date range") {
                return Err(Error::invalid(
                    "dates",
                    format!(
                        "days must be contiguous and ascending; row {} is {} after {}",
                        i + 2,
                        pair[1],
                        pair[0]
                    ),
                ));
            }
        }
        Ok(Self {
            region_names,
            dates,
            rates,
        })
    }

    pub fn num_regions(&self) -> usize {
        self.region_names.len()
    }

    pub fn num_days(&self) -> usize {
        self.dates.len()
    }

    pub fn region_names(&self) -> &[String] {
        &self.region_names
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Rates of all regions on the (0-based) day.
    pub fn day_rates(&self, day: usize) -> &[f64] {
        &self.rates[day]
    }
}

/// Loads and validates a rate matrix; errors carry the 1-based data row.
pub fn load_rate_matrix(path: &Path) -> Result<RateMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let data_err = |row: usize, reason: String| Error::Data {
        path: path.to_path_buf(),
        row,
        reason,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::DataFile {
        path: path.to_path_buf(),
        reason: "empty file".into(),
    })?;
    let header = header.trim_start_matches('\u{feff}').trim_end();
    let mut columns = header.split(',');
    if columns.next().map(str::trim) != Some("date") {
        return Err(Error::DataFile {
            path: path.to_path_buf(),
            reason: format!("header must start with `date`, got `{header}`"),
        });
    }
    let region_names: Vec<String> = columns.map(|c| c.trim().to_string()).collect();
    if region_names.is_empty() || region_names.iter().any(String::is_empty) {
        return Err(Error::DataFile {
            path: path.to_path_buf(),
            reason: "header needs one non-empty name per region".into(),
        });
    }

    let mut dates = Vec::new();
    let mut rates: Vec<Vec<f64>> = Vec::new();
    for (line_idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let row = dates.len() + 1; // 1-based data row
        let mut cells = line.split(',');
        let date_cell = cells.next().unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(date_cell, "%Y-%m-%d")
            .map_err(|e| data_err(row, format!("bad date `{date_cell}`: {e}")))?;
        let mut day = Vec::with_capacity(region_names.len());
        for (k, cell) in cells.enumerate() {
            let cell = cell.trim();
            if k >= region_names.len() {
                return Err(data_err(
                    row,
                    format!("expected {} rate columns", region_names.len()),
                ));
            }
            let rate: f64 = cell.parse().map_err(|_| {
                data_err(
                    row,
                    format!(
                        "column {} ({}): `{cell}` is not a rate",
                        k + 1,
                        region_names[k]
                    ),
                )
            })?;
            if !(rate.is_finite() && (0.0..=1.0).contains(&rate)) {
                return Err(data_err(
                    row,
                    format!(
                        "column {} ({}): rate {rate} outside [0, 1]",
                        k + 1,
                        region_names[k]
                    ),
                ));
            }
            day.push(rate);
        }
        if day.len() != region_names.len() {
            return Err(data_err(
                row,
                format!(
                    "{} rate columns, expected {}",
                    day.len(),
                    region_names.len()
                ),
            ));
        }
        if let Some(&prev) = dates.last() {
            let expected: NaiveDate = prev;
            if date != expected.succ_opt().expect("date range") {
                return Err(data_err(
                    row,
                    format!("dates must be contiguous daily; got {date} after {prev}"),
                ));
            }
        }
        dates.push(date);
        rates.push(day);
        let _ = line_idx;
    }
    RateMatrix::from_parts(region_names, dates, rates)
}

/// How replay turns a day's rates into counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObservationMode {
    /// `X ~ Bin(c, rate)` from the seeded stream.
    #[default]
    Sampled,
    /// `X = round(c * rate)`; removes all randomness.
    Deterministic,
}

/// The alarm of a replay run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayAlarm {
    /// 1-based day of the alarm (index into the matrix).
    pub day: usize,
    pub date: NaiveDate,
    /// 0-based alarmed region.
    pub region: usize,
    pub region_name: String,
}

/// Full record of a replay: traces cover exactly the days run, i.e. the
/// days before and including the alarm (or the whole matrix without one).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub alarm: Option<ReplayAlarm>,
    pub days_run: usize,
    /// CUSUM statistics after each day, `[day][region]`.
    pub stat_trace: Vec<Vec<f64>>,
    /// Allocation used on each day.
    pub allocation_trace: Vec<AllocationVector>,
}

/// Replays the monitoring loop over the matrix, stopping at the first alarm
/// or the end of the data. `model` supplies the detector design `(p, q)`,
/// the budget, and the threshold; its hotspot fields are ignored.
pub fn replay(
    matrix: &RateMatrix,
    model: &ModelParams,
    policy: &AllocatorPolicy,
    prior: &PriorConfig,
    seed: u64,
    mode: ObservationMode,
) -> Result<ReplayReport> {
    let k = matrix.num_regions();
    if model.num_regions() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: model.num_regions(),
        });
    }
    policy.validate(k, model.budget())?;
    let coeffs = model.llr_coefficients();
    let budget = model.budget();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut posterior = posterior_init(prior, k);
    let mut cusum = CusumState::new(k);
    let mut allocation = even_allocation(k, budget)?;
    let mut planner = GreedyPlanner::new();
    let mut stat_trace = Vec::new();
    let mut allocation_trace = Vec::new();

    for day in 1..=matrix.num_days() {
        let rates = matrix.day_rates(day - 1);
        let positives: Vec<u32> = allocation
            .counts()
            .iter()
            .zip(rates)
            .map(|(&c, &rate)| match mode {
                ObservationMode::Sampled => sample_binomial(c, rate, &mut rng),
                ObservationMode::Deterministic => {
                    ((f64::from(c) * rate).round() as u32).min(c)
                }
            })
            .collect();
        let batch = ObservationBatch::new(day as u64, allocation.clone(), positives)?;
        if day == 1 {
            // seeding day: counts feed the posterior only, statistics stay 0
            cusum = CusumState::from_raw(vec![0.0; k], 1);
        } else {
            cusum = cusum_step_with(&cusum, &batch, coeffs, k)?;
        }
        allocation_trace.push(allocation.clone());
        stat_trace.push(cusum.stats().to_vec());
        let alarm = check_alarm(&cusum, model.threshold());
        if alarm.fired {
            let region = alarm.region.expect("fired alarm names a region");
            return Ok(ReplayReport {
                alarm: Some(ReplayAlarm {
                    day,
                    date: matrix.dates()[day - 1],
                    region,
                    region_name: matrix.region_names()[region].clone(),
                }),
                days_run: day,
                stat_trace,
                allocation_trace,
            });
        }
        posterior = posterior_update(&posterior, &batch, prior)?;
        allocation = match policy {
            AllocatorPolicy::Ara => {
                AllocationVector::new(planner.allocate(&curves_of(&posterior), budget), budget)?
            }
            other => allocate(other, &cusum, &posterior, budget)?,
        };
    }
    Ok(ReplayReport {
        alarm: None,
        days_run: matrix.num_days(),
        stat_trace,
        allocation_trace,
    })
}
