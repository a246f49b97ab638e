// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded Monte Carlo harness for the monitoring loop.
//!
//! One replication runs the daily cycle: sample counts under the current
//! allocation, fold them into the CUSUM statistics, check the alarm, update
//! the posterior, then plan the next day's allocation. Day 1 is the
//! initialization day: it always uses an even split and its counts seed the
//! posterior, while the statistics are initialized to zero at day 1 and
//! accumulate likelihood evidence from day 2 on. The alarm is still checked
//! every day including day 1 (where only a negative threshold can fire).
//!
//! Replication `i` draws from a private `ChaCha8` stream seeded with
//! `base_seed + i`, and aggregation runs over the index-ordered outcome
//! vector, so results are bit-identical across runs, thread counts, and the
//! sequential build.
//!
//! Threshold calibration exploits that a trajectory does not depend on the
//! threshold (the alarm only stops it): each replication is simulated once
//! and its running-max record curve is kept, after which the run length for
//! any candidate threshold is a lookup. Binary search over the threshold
//! then probes exactly what re-simulating with common random numbers would
//! return, at the cost of a single in-control pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::model::{
    check_alarm, cusum_step_with, CusumState, LlrCoefficients, ModelParams, ObservationBatch,
};
use crate::planner::{curves_of, AllocationVector, GreedyPlanner};
use crate::policy::{allocate, even_allocation, AllocatorPolicy};
use crate::posterior::{posterior_init, posterior_update, PosteriorState, PriorConfig};

/// Identifies the random generator family baked into this build, recorded in
/// output metadata so archived results state their sampling provenance.
pub const GENERATOR_ID: &str = "chacha8/binomial-rand_distr-0.5";

/// Everything a Monte Carlo experiment needs.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub model: ModelParams,
    pub policy: AllocatorPolicy,
    pub prior: PriorConfig,
    pub replications: u32,
    pub base_seed: u64,
    /// Run-length truncation horizon (days).
    pub max_steps: u64,
    /// In-control average run length the threshold is calibrated to.
    pub target_arl0: f64,
    /// Calibration stops once the achieved ARL is within this distance.
    pub arl_tolerance: f64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        if !(self.target_arl0.is_finite() && self.target_arl0 > 1.0) {
            return Err(Error::invalid(
                "target_arl0",
                format!("{} must exceed 1", self.target_arl0),
            ));
        }
        if !(self.arl_tolerance.is_finite() && self.arl_tolerance > 0.0) {
            return Err(Error::invalid(
                "arl_tolerance",
                format!("{} must be positive", self.arl_tolerance),
            ));
        }
        self.policy
            .validate(self.model.num_regions(), self.model.budget())
    }
}

/// Result of a single replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Alarm day, or `max_steps` when the run was truncated.
    pub run_length: u64,
    pub truncated: bool,
    /// 0-based region that alarmed; absent when truncated.
    pub alarmed_region: Option<usize>,
    /// Per-day allocations, collected only by tracing entry points.
    pub allocation_trace: Option<Vec<AllocationVector>>,
}

/// Aggregated run-length metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Mean run length.
    pub arl: f64,
    /// Sample standard deviation of run lengths (0 for a single run).
    pub sdrl: f64,
    /// Share of non-truncated runs whose alarm named a true hotspot.
    pub detection_precision: f64,
    pub replication_count: u32,
    pub truncation_count: u32,
}

/// Calibrated threshold and the in-control ARL it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub achieved_arl0: f64,
}

/// Draws `X ~ Bin(tests, rate)`; rates at the boundary degenerate to the
/// constant outcomes.
pub(crate) fn sample_binomial<R: Rng>(tests: u32, rate: f64, rng: &mut R) -> u32 {
    if tests == 0 || rate <= 0.0 {
        return 0;
    }
    if rate >= 1.0 {
        return tests;
    }
    let dist = Binomial::new(u64::from(tests), rate).expect("rate validated in (0, 1)");
    dist.sample(rng) as u32
}

/// Samples one day of counts under the model's rate schedule.
pub fn sample_observations<R: Rng>(
    allocation: &AllocationVector,
    params: &ModelParams,
    day: u64,
    rng: &mut R,
) -> Result<ObservationBatch> {
    let positives = allocation
        .counts()
        .iter()
        .enumerate()
        .map(|(k, &c)| sample_binomial(c, params.rate_on_day(k, day), rng))
        .collect();
    ObservationBatch::new(day, allocation.clone(), positives)
}

/// Next-day allocation; the ARA path reuses the warm planner.
fn plan_next(
    policy: &AllocatorPolicy,
    cusum: &CusumState,
    posterior: &PosteriorState,
    budget: u32,
    planner: &mut GreedyPlanner,
) -> Result<AllocationVector> {
    match policy {
        AllocatorPolicy::Ara => {
            let counts = planner.allocate(&curves_of(posterior), budget);
            AllocationVector::new(counts, budget)
        }
        _ => allocate(policy, cusum, posterior, budget),
    }
}

/// One full replication: alarm day, or truncation at `max_steps`.
pub fn run_once(config: &SimulationConfig, seed: u64) -> Result<RunOutcome> {
    config.validate()?;
    run_trajectory(config, seed, config.max_steps, config.model.threshold(), false)
}

fn run_trajectory(
    config: &SimulationConfig,
    seed: u64,
    horizon: u64,
    threshold: f64,
    trace: bool,
) -> Result<RunOutcome> {
    let model = &config.model;
    let k = model.num_regions();
    let budget = model.budget();
    let coeffs = model.llr_coefficients();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut posterior = posterior_init(&config.prior, k);
    let mut cusum = CusumState::new(k);
    let mut allocation = even_allocation(k, budget)?;
    let mut planner = GreedyPlanner::new();
    let mut allocations = trace.then(Vec::new);

    for day in 1..=horizon {
        if let Some(trace) = allocations.as_mut() {
            trace.push(allocation.clone());
        }
        let batch = sample_observations(&allocation, model, day, &mut rng)?;
        if day == 1 {
            // initialization day: counts feed the posterior only, W_1 = 0
            cusum = CusumState::from_raw(vec![0.0; k], 1);
        } else {
            cusum = cusum_step_with(&cusum, &batch, coeffs, k)?;
        }
        let alarm = check_alarm(&cusum, threshold);
        if alarm.fired {
            return Ok(RunOutcome {
                run_length: day,
                truncated: false,
                alarmed_region: alarm.region,
                allocation_trace: allocations,
            });
        }
        posterior = posterior_update(&posterior, &batch, &config.prior)?;
        allocation = plan_next(&config.policy, &cusum, &posterior, budget, &mut planner)?;
    }
    Ok(RunOutcome {
        run_length: horizon,
        truncated: true,
        alarmed_region: None,
        allocation_trace: allocations,
    })
}

fn run_indexed<T, F>(count: u32, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u32) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(job).collect()
    }
}

fn aggregate(config: &SimulationConfig, outcomes: &[RunOutcome]) -> MetricsReport {
    let n = outcomes.len();
    let mean = outcomes.iter().map(|o| o.run_length as f64).sum::<f64>() / n as f64;
    let sdrl = if n < 2 {
        0.0
    } else {
        let ss: f64 = outcomes
            .iter()
            .map(|o| {
                let d = o.run_length as f64 - mean;
                d * d
            })
            .sum();
        (ss / (n as f64 - 1.0)).sqrt()
    };
    let truncated = outcomes.iter().filter(|o| o.truncated).count();
    let detected = n - truncated;
    let hits = outcomes
        .iter()
        .filter(|o| {
            o.alarmed_region
                .is_some_and(|r| config.model.hotspots().binary_search(&r).is_ok())
        })
        .count();
    MetricsReport {
        arl: mean,
        sdrl,
        detection_precision: if detected > 0 {
            hits as f64 / detected as f64
        } else {
            0.0
        },
        replication_count: n as u32,
        truncation_count: truncated as u32,
    }
}

/// Runs `config.replications` independent replications (replication `i`
/// seeded with `base_seed + i`) and aggregates the run-length metrics.
pub fn monte_carlo(config: &SimulationConfig) -> Result<MetricsReport> {
    config.validate()?;
    let outcomes = run_indexed(config.replications, |i| {
        run_once(config, config.base_seed.wrapping_add(u64::from(i)))
    })?;
    Ok(aggregate(config, &outcomes))
}

/// `monte_carlo` on the current thread only; same result bit for bit.
pub fn monte_carlo_sequential(config: &SimulationConfig) -> Result<MetricsReport> {
    config.validate()?;
    let outcomes: Vec<RunOutcome> = (0..config.replications)
        .map(|i| run_once(config, config.base_seed.wrapping_add(u64::from(i))))
        .collect::<Result<_>>()?;
    Ok(aggregate(config, &outcomes))
}

/// Strictly increasing running-max values of `max_k W_k` with the days they
/// were first reached. The run length at threshold `h` is the first day
/// whose record exceeds `h`.
#[derive(Debug, Clone, Default)]
struct RecordCurve {
    days: Vec<u64>,
    values: Vec<f64>,
}

impl RecordCurve {
    fn push(&mut self, day: u64, value: f64) {
        if self.values.last().is_none_or(|&v| value > v) {
            self.days.push(day);
            self.values.push(value);
        }
    }

    fn first_passage(&self, threshold: f64, horizon: u64) -> u64 {
        // first index with value > threshold
        let idx = self.values.partition_point(|&v| v <= threshold);
        self.days.get(idx).copied().unwrap_or(horizon)
    }
}

/// In-control record curves for several detector designs `q` sharing one
/// observation stream.
///
/// The sampled counts and (for ARA/Even) the allocation sequence do not
/// depend on `q` in control: ARA plans from the posterior, Even from
/// nothing. Top-R ranks on the CUSUM statistics, which do depend on the
/// design, so it gets an independent pass per `q`.
fn in_control_record_curves(
    config: &SimulationConfig,
    designs: &[f64],
    threshold_cap: f64,
) -> Result<Vec<Vec<RecordCurve>>> {
    let shared_stream_ok = !matches!(config.policy, AllocatorPolicy::TopR { .. });
    let design_coeffs: Vec<LlrCoefficients> = designs
        .iter()
        .map(|&q| LlrCoefficients::new(config.model.in_control_rate(), q))
        .collect::<Result<_>>()?;

    if shared_stream_ok {
        let per_rep = run_indexed(config.replications, |i| {
            record_curves_one_rep(
                config,
                &design_coeffs,
                threshold_cap,
                config.base_seed.wrapping_add(u64::from(i)),
            )
        })?;
        // transpose [rep][design] -> [design][rep]
        let mut curves: Vec<Vec<RecordCurve>> = designs
            .iter()
            .map(|_| Vec::with_capacity(per_rep.len()))
            .collect();
        for rep in per_rep {
            for (qi, curve) in rep.into_iter().enumerate() {
                curves[qi].push(curve);
            }
        }
        Ok(curves)
    } else {
        designs
            .iter()
            .zip(&design_coeffs)
            .map(|(&q, &coeffs)| {
                let mut cfg = config.clone();
                cfg.model = ModelParams::new(
                    cfg.model.num_regions(),
                    cfg.model.in_control_rate(),
                    q,
                    cfg.model.budget(),
                )?
                .with_threshold(cfg.model.threshold())?
                .with_change_time(cfg.model.change_time());
                // in control: hotspots intentionally dropped
                run_indexed(cfg.replications, |i| {
                    record_curves_one_rep(
                        &cfg,
                        &[coeffs],
                        threshold_cap,
                        cfg.base_seed.wrapping_add(u64::from(i)),
                    )
                    .map(|mut v| v.pop().expect("one design requested"))
                })
            })
            .collect()
    }
}

/// One in-control replication, tracking a CUSUM vector per design. Stops
/// early once every design's record has cleared the cap (no threshold at or
/// below the cap can be affected by later days).
fn record_curves_one_rep(
    config: &SimulationConfig,
    design_coeffs: &[LlrCoefficients],
    threshold_cap: f64,
    seed: u64,
) -> Result<Vec<RecordCurve>> {
    let model = &config.model;
    let k = model.num_regions();
    let budget = model.budget();
    let p = model.in_control_rate();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut posterior = posterior_init(&config.prior, k);
    let mut allocation = even_allocation(k, budget)?;
    let mut planner = GreedyPlanner::new();

    let designs = design_coeffs.len();
    let mut stats: Vec<Vec<f64>> = vec![vec![0.0; k]; designs];
    let mut curves: Vec<RecordCurve> = vec![RecordCurve::default(); designs];
    let mut capped = vec![false; designs];
    let mut capped_count = 0usize;
    // Top-R feedback needs the design's own statistics; only valid when a
    // single design runs in this pass.
    let top_r_feedback = matches!(config.policy, AllocatorPolicy::TopR { .. });
    debug_assert!(!top_r_feedback || designs == 1);

    for day in 1..=config.max_steps {
        let counts = allocation.counts();
        let positives: Vec<u32> = counts
            .iter()
            .map(|&c| sample_binomial(c, p, &mut rng))
            .collect();
        // day 1 seeds the posterior only; statistics accumulate from day 2
        if day > 1 {
            for (qi, coeffs) in design_coeffs.iter().enumerate() {
                if capped[qi] {
                    continue;
                }
                let mut day_max = f64::NEG_INFINITY;
                for ((w, &c), &x) in stats[qi].iter_mut().zip(counts).zip(&positives) {
                    *w = w.max(0.0) + coeffs.increment(c, x);
                    day_max = day_max.max(*w);
                }
                curves[qi].push(day, day_max);
                if day_max > threshold_cap {
                    capped[qi] = true;
                    capped_count += 1;
                }
            }
            if capped_count == designs {
                break;
            }
        }
        if day == config.max_steps {
            break;
        }
        let batch = ObservationBatch::new(day, allocation.clone(), positives)?;
        posterior = posterior_update(&posterior, &batch, &config.prior)?;
        allocation = match &config.policy {
            AllocatorPolicy::Ara => {
                AllocationVector::new(planner.allocate(&curves_of(&posterior), budget), budget)?
            }
            AllocatorPolicy::Even => allocation,
            top_r => {
                let cusum = CusumState::from_raw(stats[0].clone(), day);
                allocate(top_r, &cusum, &posterior, budget)?
            }
        };
    }
    Ok(curves)
}

fn arl_at(curves: &[RecordCurve], threshold: f64, horizon: u64) -> f64 {
    let total: u64 = curves
        .iter()
        .map(|c| c.first_passage(threshold, horizon))
        .sum();
    total as f64 / curves.len() as f64
}

/// In-control ARL achieved at each candidate threshold, from one shared
/// record pass (useful for threshold sensitivity profiles and for policies
/// whose achievable ARL is a coarse step function).
pub fn arl0_profile(config: &SimulationConfig, thresholds: &[f64]) -> Result<Vec<f64>> {
    config.validate()?;
    if !config.model.is_in_control() {
        return Err(Error::invalid(
            "model",
            "ARL0 profiling requires an in-control configuration",
        ));
    }
    if thresholds.is_empty() {
        return Err(Error::invalid("thresholds", "needs at least one value"));
    }
    let cap = thresholds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let curves = in_control_record_curves(config, &[config.model.out_of_control_rate()], cap)?;
    Ok(thresholds
        .iter()
        .map(|&h| arl_at(&curves[0], h, config.max_steps))
        .collect())
}

/// Default threshold search bracket.
pub const DEFAULT_BRACKET: (f64, f64) = (0.0, 64.0);

/// Binary-searches the alarm threshold until the in-control ARL is within
/// `arl_tolerance` of `target_arl0` (or the bracket is exhausted, returning
/// the closer endpoint). The configuration must be in control.
pub fn calibrate_threshold(config: &SimulationConfig) -> Result<Calibration> {
    calibrate_threshold_in(config, DEFAULT_BRACKET.0, DEFAULT_BRACKET.1)
}

/// `calibrate_threshold` with an explicit bracket `[lo, hi]`.
pub fn calibrate_threshold_in(config: &SimulationConfig, lo: f64, hi: f64) -> Result<Calibration> {
    let out = calibrate_threshold_multi_q(
        config,
        &[config.model.out_of_control_rate()],
        lo,
        hi,
    )?;
    Ok(out[0])
}

/// Calibrates one threshold per detector design `q`, identical to calling
/// [`calibrate_threshold_in`] per design but sharing the in-control pass
/// whenever the policy permits it.
pub fn calibrate_threshold_multi_q(
    config: &SimulationConfig,
    designs: &[f64],
    lo: f64,
    hi: f64,
) -> Result<Vec<Calibration>> {
    config.validate()?;
    if !config.model.is_in_control() {
        return Err(Error::invalid(
            "model",
            "calibration requires an in-control configuration (no hotspots or no change time)",
        ));
    }
    if config.max_steps < (10.0 * config.target_arl0) as u64 {
        return Err(Error::invalid(
            "max_steps",
            format!(
                "calibration needs max_steps >= 10 * target_arl0 (= {})",
                (10.0 * config.target_arl0) as u64
            ),
        ));
    }
    if designs.is_empty() {
        return Err(Error::invalid("designs", "needs at least one q"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(
            "bracket",
            format!("[{lo}, {hi}] is not a valid threshold bracket"),
        ));
    }
    for &q in designs {
        let p = config.model.in_control_rate();
        if !(q.is_finite() && p < q && q < 1.0) {
            return Err(Error::invalid("designs", format!("q={q} is not in (p, 1)")));
        }
    }

    let curves = in_control_record_curves(config, designs, hi)?;
    let horizon = config.max_steps;
    let target = config.target_arl0;
    let tolerance = config.arl_tolerance;

    curves
        .iter()
        .zip(designs)
        .map(|(curves, &q)| {
            let arl_hi = arl_at(curves, hi, horizon);
            if arl_hi < target - tolerance {
                return Err(Error::Calibration(format!(
                    "target ARL0 {target} unreachable below threshold {hi} for q={q} \
                     (achieved {arl_hi:.3}); raise the bracket or max_steps"
                )));
            }
            let arl_lo = arl_at(curves, lo, horizon);
            if arl_lo >= target {
                if (arl_lo - target).abs() <= tolerance {
                    return Ok(Calibration {
                        threshold: lo,
                        achieved_arl0: arl_lo,
                    });
                }
                return Err(Error::Calibration(format!(
                    "ARL0 at the lower bracket {lo} already exceeds the target {target} for q={q} \
                     (achieved {arl_lo:.3}); lower the bracket"
                )));
            }
            // Search for the smallest threshold achieving at least the
            // target: the in-control run-length constraint is one-sided, so
            // when the achievable ARL is a step function we stop on the
            // conservative (fewer false alarms) side of the gap.
            let (mut lo, mut hi) = (lo, hi);
            let mut at_hi = arl_hi;
            while hi - lo >= 1e-3 {
                let mid = 0.5 * (lo + hi);
                let arl = arl_at(curves, mid, horizon);
                if (arl - target).abs() <= tolerance {
                    return Ok(Calibration {
                        threshold: mid,
                        achieved_arl0: arl,
                    });
                }
                if arl < target {
                    lo = mid;
                } else {
                    hi = mid;
                    at_hi = arl;
                }
            }
            Ok(Calibration {
                threshold: hi,
                achieved_arl0: at_hi,
            })
        })
        .collect()
}

/// Daily allocations of one phase of a behavior study, `[region][day]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    per_region: Vec<Vec<u32>>,
    num_days: usize,
}

impl PhaseSummary {
    fn from_trace(num_regions: usize, trace: &[AllocationVector]) -> Self {
        let mut per_region = vec![Vec::with_capacity(trace.len()); num_regions];
        for allocation in trace {
            for (k, &c) in allocation.counts().iter().enumerate() {
                per_region[k].push(c);
            }
        }
        Self {
            per_region,
            num_days: trace.len(),
        }
    }

    pub fn num_days(&self) -> usize {
        self.num_days
    }

    pub fn num_regions(&self) -> usize {
        self.per_region.len()
    }

    /// The region's daily test counts in day order.
    pub fn daily(&self, region: usize) -> &[u32] {
        &self.per_region[region]
    }

    /// Linear-interpolated quantile (`level` in `[0, 1]`) of the region's
    /// daily counts; NaN for an empty phase.
    pub fn quantile(&self, region: usize, level: f64) -> f64 {
        let mut values = self.per_region[region].clone();
        if values.is_empty() {
            return f64::NAN;
        }
        values.sort_unstable();
        let pos = level.clamp(0.0, 1.0) * (values.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        let frac = pos - pos.floor();
        f64::from(values[lo]) * (1.0 - frac) + f64::from(values[hi]) * frac
    }

    pub fn median(&self, region: usize) -> f64 {
        self.quantile(region, 0.5)
    }

    pub fn mean(&self, region: usize) -> f64 {
        if self.num_days == 0 {
            return f64::NAN;
        }
        self.per_region[region]
            .iter()
            .map(|&c| f64::from(c))
            .sum::<f64>()
            / self.num_days as f64
    }
}

/// Allocation distributions from an alarm-free run: `ic_days` in control
/// followed by `oc_days` with the hotspot set active.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorStudy {
    pub in_control: PhaseSummary,
    pub out_of_control: PhaseSummary,
}

/// Runs the monitoring loop for `ic_days + oc_days` days with the alarm
/// disabled and the change scheduled at `ic_days`, and summarizes the daily
/// allocations of both phases.
pub fn behavior_study(
    config: &SimulationConfig,
    ic_days: u64,
    oc_days: u64,
) -> Result<BehaviorStudy> {
    config.validate()?;
    if ic_days + oc_days == 0 {
        return Err(Error::invalid("ic_days", "study needs at least one day"));
    }
    let mut cfg = config.clone();
    cfg.model = cfg.model.with_change_time(Some(ic_days));
    let horizon = ic_days + oc_days;
    let outcome = run_trajectory(&cfg, cfg.base_seed, horizon, f64::INFINITY, true)?;
    let trace = outcome.allocation_trace.expect("tracing enabled");
    debug_assert_eq!(trace.len() as u64, horizon);
    let k = cfg.model.num_regions();
    let (ic, oc) = trace.split_at(ic_days as usize);
    Ok(BehaviorStudy {
        in_control: PhaseSummary::from_trace(k, ic),
        out_of_control: PhaseSummary::from_trace(k, oc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::assert_close;

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            model: ModelParams::new(3, 0.01, 0.05, 300)
                .unwrap()
                .with_threshold(4.0)
                .unwrap()
                .with_hotspots([0])
                .unwrap()
                .with_change_time(Some(0)),
            policy: AllocatorPolicy::Ara,
            prior: PriorConfig::new(1.5, 148.5, 0.3).unwrap(),
            replications: 64,
            base_seed: 42,
            max_steps: 500,
            target_arl0: 50.0,
            arl_tolerance: 5.0,
        }
    }

    fn in_control(mut cfg: SimulationConfig) -> SimulationConfig {
        cfg.model = cfg.model.clone().with_hotspots([]).unwrap();
        cfg
    }

    #[test]
    fn binomial_kernel_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_binomial(0, 0.5, &mut rng), 0);
        assert_eq!(sample_binomial(17, 0.0, &mut rng), 0);
        assert_eq!(sample_binomial(17, 1.0, &mut rng), 17);
        let x = sample_binomial(100, 0.3, &mut rng);
        assert!(x <= 100);
    }

    #[test]
    fn binomial_kernel_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let total: u64 = (0..draws)
            .map(|_| u64::from(sample_binomial(100, 0.01, &mut rng)))
            .sum();
        let mean = total as f64 / draws as f64;
        assert_close(mean, 1.0, 0.02);
    }

    #[test]
    fn unreachable_threshold_truncates() {
        let mut cfg = small_config();
        cfg.model = cfg.model.with_threshold(1e9).unwrap();
        cfg.max_steps = 40;
        let outcome = run_once(&cfg, 1).unwrap();
        assert!(outcome.truncated);
        assert_eq!(outcome.run_length, 40);
        assert_eq!(outcome.alarmed_region, None);
    }

    #[test]
    fn threshold_below_initial_statistic_alarms_immediately() {
        // day-1 statistics are the initialized zeros, so anything below 0
        // fires at once
        let mut cfg = small_config();
        cfg.model = cfg.model.with_threshold(-1.0).unwrap();
        let outcome = run_once(&cfg, 9).unwrap();
        assert_eq!(outcome.run_length, 1);
        assert!(!outcome.truncated);
    }

    #[test]
    fn run_once_is_reproducible() {
        let cfg = small_config();
        let a = run_once(&cfg, 5).unwrap();
        let b = run_once(&cfg, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_parallel_matches_sequential() {
        let cfg = small_config();
        let par = monte_carlo(&cfg).unwrap();
        let seq = monte_carlo_sequential(&cfg).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn degenerate_metrics_for_single_replication() {
        let mut cfg = small_config();
        cfg.replications = 1;
        let report = monte_carlo(&cfg).unwrap();
        assert_eq!(report.sdrl, 0.0);
        assert_eq!(report.replication_count, 1);
    }

    #[test]
    fn metrics_identical_lengths_give_zero_sdrl() {
        // threshold of -1 with a near-degenerate design alarms on day 1 in
        // every replication
        let mut cfg = small_config();
        cfg.model = ModelParams::new(3, 0.01, 0.011, 300)
            .unwrap()
            .with_threshold(-1.0)
            .unwrap();
        cfg.replications = 16;
        let report = monte_carlo(&cfg).unwrap();
        assert_eq!(report.arl, 1.0);
        assert_eq!(report.sdrl, 0.0);
    }

    #[test]
    fn calibration_requires_in_control() {
        let cfg = small_config();
        assert!(calibrate_threshold(&cfg).is_err());
    }

    #[test]
    fn calibration_hits_target_and_matches_monte_carlo() {
        let cfg = in_control(small_config());
        let cal = calibrate_threshold(&cfg).unwrap();
        assert!(
            (cal.achieved_arl0 - cfg.target_arl0).abs() <= cfg.arl_tolerance,
            "achieved {} vs target {}",
            cal.achieved_arl0,
            cfg.target_arl0
        );
        // the record-curve shortcut must agree exactly with re-simulation
        let mut check = cfg.clone();
        check.model = check.model.with_threshold(cal.threshold).unwrap();
        let report = monte_carlo(&check).unwrap();
        assert_eq!(report.arl, cal.achieved_arl0);
    }

    #[test]
    fn calibration_is_monotone_in_target() {
        let mut cfg = in_control(small_config());
        cfg.target_arl0 = 25.0;
        cfg.arl_tolerance = 2.0;
        let low = calibrate_threshold(&cfg).unwrap();
        cfg.target_arl0 = 100.0;
        cfg.arl_tolerance = 8.0;
        cfg.max_steps = 1000;
        let high = calibrate_threshold(&cfg).unwrap();
        assert!(low.threshold <= high.threshold);
    }

    #[test]
    fn calibration_multi_q_matches_single_q() {
        let cfg = in_control(small_config());
        let joint = calibrate_threshold_multi_q(&cfg, &[0.03, 0.05], 0.0, 64.0).unwrap();
        for (&q, &expected) in [0.03, 0.05].iter().zip(&joint) {
            let mut single = cfg.clone();
            single.model = ModelParams::new(3, 0.01, q, 300)
                .unwrap()
                .with_threshold(single.model.threshold())
                .unwrap();
            let got = calibrate_threshold(&single).unwrap();
            assert_eq!(got, expected, "q={q}");
        }
    }

    #[test]
    fn calibration_bracket_failure_is_reported() {
        let mut cfg = in_control(small_config());
        cfg.target_arl0 = 400.0; // unreachable below h=0.5 with max_steps 500
        cfg.max_steps = 4000;
        let result = calibrate_threshold_in(&cfg, 0.0, 0.5);
        assert!(matches!(result, Err(Error::Calibration(_))));
    }

    #[test]
    fn behavior_study_phases_have_requested_lengths() {
        let mut cfg = small_config();
        cfg.model = cfg.model.with_hotspots([0]).unwrap();
        let study = behavior_study(&cfg, 30, 20).unwrap();
        assert_eq!(study.in_control.num_days(), 30);
        assert_eq!(study.out_of_control.num_days(), 20);
        assert_eq!(study.in_control.num_regions(), 3);
        // budget conserved every day
        for k in 0..3 {
            assert_eq!(study.in_control.daily(k).len(), 30);
        }
    }

    #[test]
    fn behavior_study_without_oc_phase() {
        let cfg = in_control(small_config());
        let study = behavior_study(&cfg, 25, 0).unwrap();
        assert_eq!(study.out_of_control.num_days(), 0);
        assert!(study.out_of_control.median(0).is_nan());
        // identical to the in-control prefix of a longer study under the
        // same seed
        let longer = behavior_study(&cfg, 25, 10).unwrap();
        assert_eq!(study.in_control, longer.in_control);
    }

    #[test]
    fn quantiles_interpolate() {
        let summary = PhaseSummary {
            per_region: vec![vec![1, 2, 3, 4]],
            num_days: 4,
        };
        assert_close(summary.median(0), 2.5, 1e-12);
        assert_close(summary.quantile(0, 0.0), 1.0, 1e-12);
        assert_close(summary.quantile(0, 1.0), 4.0, 1e-12);
        assert_close(summary.mean(0), 2.5, 1e-12);
    }

    #[test]
    fn config_validation_rejects_degenerate_targets() {
        let mut cfg = small_config();
        cfg.target_arl0 = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
    }
}
