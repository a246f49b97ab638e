// SPDX-License-Identifier: MIT OR Apache-2.0

//! Binomial monitoring model and CUSUM statistics.
//!
//! Each of `K` regions reports a daily count `X_k ~ Bin(c_k, rate)` where
//! `c_k` is the number of tests allocated to that region. In control the
//! rate is `p`; after the change time a hotspot region shifts to `q > p`.
//! Per region the one-sided CUSUM statistic accumulates the binomial
//! log-likelihood ratio of a single day's count,
//!
//! ```text
//! W_{k,t} = max(W_{k,t-1}, 0) + c_k * ln((1-q)/(1-p)) + X_k * ln(q(1-p) / (p(1-q)))
//! ```
//!
//! and an alarm is raised at the first day where `max_k W_{k,t}` strictly
//! exceeds the threshold. The binomial coefficient cancels in the ratio, so
//! the increment is linear in `(c_k, X_k)`; natural logarithms throughout.

use crate::error::{Error, Result};
use crate::planner::AllocationVector;

/// Model and monitoring parameters shared by simulation and replay.
///
/// `out_of_control_rate` is the detector's design rate `q`: it fixes the
/// LLR coefficients and therefore what the threshold is calibrated for.
/// The rate a hotspot actually shifts to may differ (`hotspot_rate`,
/// defaulting to `q`): benchmark sweeps hold the detector design fixed
/// while varying the true post-change rate.
///
/// Invariants enforced at construction: `0 < p < q < 1`, `budget >= 1`,
/// `num_regions >= 1`, hotspot indices in `0..num_regions`. The alarm
/// threshold may be any finite value; negative thresholds are only useful
/// in tests (an operational threshold is positive).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    num_regions: usize,
    in_control_rate: f64,
    out_of_control_rate: f64,
    hotspot_rate: f64,
    budget: u32,
    threshold: f64,
    hotspots: Vec<usize>,
    change_time: Option<u64>,
}

impl ModelParams {
    /// Rates are validated as `0 < p < q < 1`; the threshold defaults to
    /// `+inf` (never alarm) and the hotspot set to empty (in control).
    pub fn new(
        num_regions: usize,
        in_control_rate: f64,
        out_of_control_rate: f64,
        budget: u32,
    ) -> Result<Self> {
        if num_regions == 0 {
            return Err(Error::invalid("num_regions", "must be at least 1"));
        }
        if budget == 0 {
            return Err(Error::invalid("budget", "must be at least 1"));
        }
        let valid_rate = |r: f64| r.is_finite() && 0.0 < r && r < 1.0;
        if !valid_rate(in_control_rate) {
            return Err(Error::invalid(
                "in_control_rate",
                format!("{in_control_rate} is not in (0, 1)"),
            ));
        }
        if !valid_rate(out_of_control_rate) {
            return Err(Error::invalid(
                "out_of_control_rate",
                format!("{out_of_control_rate} is not in (0, 1)"),
            ));
        }
        if in_control_rate >= out_of_control_rate {
            return Err(Error::invalid(
                "out_of_control_rate",
                format!(
                    "must exceed in_control_rate (got p={in_control_rate}, q={out_of_control_rate}); \
                     only upward rate shifts are monitored"
                ),
            ));
        }
        Ok(Self {
            num_regions,
            in_control_rate,
            out_of_control_rate,
            hotspot_rate: out_of_control_rate,
            budget,
            threshold: f64::INFINITY,
            hotspots: Vec::new(),
            change_time: Some(0),
        })
    }

    /// Sets the rate hotspots actually shift to (the detector design stays
    /// at `out_of_control_rate`).
    pub fn with_hotspot_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && self.in_control_rate < rate && rate < 1.0) {
            return Err(Error::invalid(
                "hotspot_rate",
                format!(
                    "{rate} is not in ({}, 1); upward shifts only",
                    self.in_control_rate
                ),
            ));
        }
        self.hotspot_rate = rate;
        Ok(self)
    }

    /// Sets the alarm threshold (any finite value, or `+inf` to disable).
    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if threshold.is_nan() {
            return Err(Error::invalid("threshold", "must not be NaN"));
        }
        self.threshold = threshold;
        Ok(self)
    }

    /// Sets the hotspot set (0-based region indices).
    pub fn with_hotspots<I: IntoIterator<Item = usize>>(mut self, hotspots: I) -> Result<Self> {
        let mut set: Vec<usize> = hotspots.into_iter().collect();
        set.sort_unstable();
        set.dedup();
        if let Some(&bad) = set.iter().find(|&&k| k >= self.num_regions) {
            return Err(Error::invalid(
                "hotspots",
                format!("region index {bad} out of range 0..{}", self.num_regions),
            ));
        }
        self.hotspots = set;
        Ok(self)
    }

    /// Sets the change time `t0` (`None` = never; the shift affects days
    /// `t > t0`, so `Some(0)` means the change is active from day 1).
    pub fn with_change_time(mut self, change_time: Option<u64>) -> Self {
        self.change_time = change_time;
        self
    }

    pub fn num_regions(&self) -> usize {
        self.num_regions
    }

    pub fn in_control_rate(&self) -> f64 {
        self.in_control_rate
    }

    pub fn out_of_control_rate(&self) -> f64 {
        self.out_of_control_rate
    }

    /// True post-change rate of hotspot regions (defaults to the design
    /// rate `q`).
    pub fn hotspot_rate(&self) -> f64 {
        self.hotspot_rate
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn hotspots(&self) -> &[usize] {
        &self.hotspots
    }

    pub fn change_time(&self) -> Option<u64> {
        self.change_time
    }

    /// True when the run is in control for its whole horizon.
    pub fn is_in_control(&self) -> bool {
        self.hotspots.is_empty() || self.change_time.is_none()
    }

    /// The sampling rate of region `k` on day `t`.
    pub fn rate_on_day(&self, region: usize, day: u64) -> f64 {
        match self.change_time {
            Some(t0) if day > t0 && self.hotspots.binary_search(&region).is_ok() => {
                self.hotspot_rate
            }
            _ => self.in_control_rate,
        }
    }

    /// Log-likelihood-ratio coefficients for this model's `(p, q)`.
    pub fn llr_coefficients(&self) -> LlrCoefficients {
        LlrCoefficients::new(self.in_control_rate, self.out_of_control_rate)
            .expect("rates validated at construction")
    }
}

/// Precomputed coefficients of the per-day log-likelihood ratio
/// `c * per_test + x * per_positive`.
///
/// `p == q` is permitted here (both coefficients vanish); `ModelParams`
/// rejects it because a degenerate detector never accumulates evidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrCoefficients {
    per_test: f64,
    per_positive: f64,
}

impl LlrCoefficients {
    pub fn new(in_control_rate: f64, out_of_control_rate: f64) -> Result<Self> {
        for (name, r) in [
            ("in_control_rate", in_control_rate),
            ("out_of_control_rate", out_of_control_rate),
        ] {
            if !(r.is_finite() && 0.0 < r && r < 1.0) {
                return Err(Error::invalid(name, format!("{r} is not in (0, 1)")));
            }
        }
        let (p, q) = (in_control_rate, out_of_control_rate);
        Ok(Self {
            per_test: ((1.0 - q) / (1.0 - p)).ln(),
            per_positive: (q * (1.0 - p) / (p * (1.0 - q))).ln(),
        })
    }

    pub fn per_test(&self) -> f64 {
        self.per_test
    }

    pub fn per_positive(&self) -> f64 {
        self.per_positive
    }

    /// The day's log-likelihood ratio for `positives` out of `tests`.
    #[inline]
    pub fn increment(&self, tests: u32, positives: u32) -> f64 {
        f64::from(tests) * self.per_test + f64::from(positives) * self.per_positive
    }
}

/// Log-likelihood ratio of a single day's binomial count under the
/// out-of-control rate `q` versus the in-control rate `p`:
/// `ln pmf_Bin(c,q)(x) - ln pmf_Bin(c,p)(x)`.
///
/// Zero tests contribute a zero increment, so unallocated regions idle.
pub fn llr_increment(tests: u32, positives: u32, p: f64, q: f64) -> Result<f64> {
    if positives > tests {
        return Err(Error::invalid(
            "positives",
            format!("{positives} positives out of {tests} tests"),
        ));
    }
    Ok(LlrCoefficients::new(p, q)?.increment(tests, positives))
}

/// One day of observations: the tests allocated per region and the
/// positive counts that came back.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    time: u64,
    tests: AllocationVector,
    positives: Vec<u32>,
}

impl ObservationBatch {
    pub fn new(time: u64, tests: AllocationVector, positives: Vec<u32>) -> Result<Self> {
        if time == 0 {
            return Err(Error::invalid("time", "observation days start at 1"));
        }
        if positives.len() != tests.num_regions() {
            return Err(Error::DimensionMismatch {
                expected: tests.num_regions(),
                actual: positives.len(),
            });
        }
        if let Some((k, (&x, &c))) = positives
            .iter()
            .zip(tests.counts())
            .enumerate()
            .find(|(_, (&x, &c))| x > c)
        {
            return Err(Error::invalid(
                "positives",
                format!("region {k}: {x} positives out of {c} tests"),
            ));
        }
        Ok(Self {
            time,
            tests,
            positives,
        })
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn tests(&self) -> &AllocationVector {
        &self.tests
    }

    pub fn positives(&self) -> &[u32] {
        &self.positives
    }

    pub fn num_regions(&self) -> usize {
        self.positives.len()
    }
}

/// Per-region CUSUM statistics after `time` days.
///
/// Stored values may be negative: the `max(W, 0)` clamp applies to the
/// *previous* statistic when the next increment is added, so a single
/// negative increment from a resting statistic is retained as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumState {
    stats: Vec<f64>,
    time: u64,
}

impl CusumState {
    /// All statistics start at zero.
    pub fn new(num_regions: usize) -> Self {
        Self {
            stats: vec![0.0; num_regions],
            time: 0,
        }
    }

    /// Wraps statistics computed elsewhere (engine-internal fast paths).
    pub(crate) fn from_raw(stats: Vec<f64>, time: u64) -> Self {
        Self { stats, time }
    }

    pub fn stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn num_regions(&self) -> usize {
        self.stats.len()
    }

    /// Largest statistic with its region (lowest index on ties).
    pub fn max_stat(&self) -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, &w) in self.stats.iter().enumerate() {
            if w > best.1 {
                best = (k, w);
            }
        }
        best
    }
}

/// Advances the CUSUM statistics by one observed day.
pub fn cusum_step(
    state: &CusumState,
    batch: &ObservationBatch,
    params: &ModelParams,
) -> Result<CusumState> {
    cusum_step_with(state, batch, params.llr_coefficients(), params.num_regions())
}

/// `cusum_step` against explicit LLR coefficients (the kernel the engine
/// uses when monitoring several `q` designs over one observation stream).
pub fn cusum_step_with(
    state: &CusumState,
    batch: &ObservationBatch,
    coeffs: LlrCoefficients,
    num_regions: usize,
) -> Result<CusumState> {
    if state.num_regions() != num_regions || batch.num_regions() != num_regions {
        return Err(Error::DimensionMismatch {
            expected: num_regions,
            actual: if state.num_regions() != num_regions {
                state.num_regions()
            } else {
                batch.num_regions()
            },
        });
    }
    if batch.time() != state.time + 1 {
        return Err(Error::TimeMismatch {
            state: state.time,
            batch: batch.time(),
        });
    }
    let stats = state
        .stats
        .iter()
        .zip(batch.tests().counts().iter().zip(batch.positives()))
        .map(|(&w, (&c, &x))| w.max(0.0) + coeffs.increment(c, x))
        .collect();
    Ok(CusumState {
        stats,
        time: batch.time(),
    })
}

/// Outcome of an alarm check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlarmReport {
    pub fired: bool,
    /// 0-based region that triggered the alarm (lowest index on ties).
    pub region: Option<usize>,
}

/// Fires iff `max_k W_k` strictly exceeds the threshold ("exceeds", not
/// "reaches").
pub fn check_alarm(state: &CusumState, threshold: f64) -> AlarmReport {
    let (region, max) = state.max_stat();
    if state.num_regions() > 0 && max > threshold {
        AlarmReport {
            fired: true,
            region: Some(region),
        }
    } else {
        AlarmReport {
            fired: false,
            region: None,
        }
    }
}
