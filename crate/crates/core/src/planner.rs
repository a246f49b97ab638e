// SPDX-License-Identifier: MIT OR Apache-2.0

//! UCB reward and budgeted integer allocation.
//!
//! Each region's one-day reward for receiving `c` tests is the posterior
//! mean plus one posterior standard deviation of its CUSUM evidence,
//! reduced (the shared log-ratio coefficient and constant drop out) to
//!
//! ```text
//! f(c) = m c + sqrt( c v (c/s + 1) )
//! m = alpha / (alpha + beta)
//! v = alpha beta / ((alpha + beta)(alpha + beta + 1))
//! s = alpha + beta
//! ```
//!
//! `f` is strictly increasing and strictly concave, so the marginal gain
//! `g(c) = f(c) - f(c-1)` is positive and decreasing, and allocating the
//! budget one test at a time to the currently best marginal attains the
//! global optimum of `sum_k f_k(c_k)` subject to `sum_k c_k = C`.
//!
//! Two exact strategies implement that greedy rule:
//!
//! * `unit`: literal one-test-at-a-time allocation, `O(C K)`;
//! * `threshold`: bisect a marginal-value cutoff `lambda`, bulk-allocate
//!   every test whose marginal is `>= lambda` (a prefix of each region's
//!   decreasing marginal sequence), and finish the short remainder with the
//!   unit rule. Equivalent to taking the top-`C` entries of the marginal
//!   matrix, which is exactly what the unit greedy does.
//!
//! Ties are broken toward the lowest region index in both strategies.

use crate::error::{Error, Result};
use crate::posterior::PosteriorState;

/// Nonnegative tests per region, summing exactly to the budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationVector {
    counts: Vec<u32>,
    budget: u32,
}

impl AllocationVector {
    pub fn new(counts: Vec<u32>, budget: u32) -> Result<Self> {
        if budget == 0 {
            return Err(Error::invalid("budget", "must be at least 1"));
        }
        let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        if total != u64::from(budget) {
            return Err(Error::invalid(
                "counts",
                format!("sum {total} does not equal budget {budget}"),
            ));
        }
        Ok(Self { counts, budget })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn num_regions(&self) -> usize {
        self.counts.len()
    }
}

/// Per-region reward curve constants derived from `Beta(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RewardCurve {
    mean: f64,
    spread: f64,
    strength: f64,
}

impl RewardCurve {
    pub(crate) fn from_beta(alpha: f64, beta: f64) -> Self {
        let strength = alpha + beta;
        // alpha*beta/(s*(s+1)) arranged to stay finite for huge parameters
        let spread = (alpha / strength) * (beta / (strength + 1.0));
        Self {
            mean: alpha / strength,
            spread,
            strength,
        }
    }

    /// Exploration term `sqrt(c v (c/s + 1))`.
    #[inline]
    fn risk(&self, c: f64) -> f64 {
        (self.spread * c * (c / self.strength + 1.0)).sqrt()
    }

    /// Reward `f(c)`.
    #[inline]
    pub(crate) fn value(&self, c: u32) -> f64 {
        let c = f64::from(c);
        self.mean * c + self.risk(c)
    }

    /// Marginal gain of the `c`-th allocated test, `f(c) - f(c-1)`, `c >= 1`.
    #[inline]
    fn unit_gain(&self, c: u32) -> f64 {
        let c = f64::from(c);
        self.mean + self.risk(c) - self.risk(c - 1.0)
    }
}

fn check_beta(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is not positive")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("{beta} is not positive")));
    }
    Ok(())
}

/// Reward for giving `c` tests to a region with posterior `Beta(alpha, beta)`.
pub fn reward(c: u32, alpha: f64, beta: f64) -> Result<f64> {
    check_beta(alpha, beta)?;
    Ok(RewardCurve::from_beta(alpha, beta).value(c))
}

/// Marginal reward `f(c+1) - f(c)`; strictly positive and non-increasing.
pub fn reward_increment(c: u32, alpha: f64, beta: f64) -> Result<f64> {
    check_beta(alpha, beta)?;
    Ok(RewardCurve::from_beta(alpha, beta).unit_gain(c + 1))
}

pub(crate) fn curves_of(posterior: &PosteriorState) -> Vec<RewardCurve> {
    posterior
        .alpha()
        .iter()
        .zip(posterior.beta())
        .map(|(&a, &b)| RewardCurve::from_beta(a, b))
        .collect()
}

/// Total reward of an allocation under the given posterior.
pub fn allocation_objective(posterior: &PosteriorState, allocation: &AllocationVector) -> f64 {
    curves_of(posterior)
        .iter()
        .zip(allocation.counts())
        .map(|(curve, &c)| curve.value(c))
        .sum()
}

/// Greedy budget allocation over the current posterior; attains the global
/// optimum (see module docs). Deterministic: ties go to the lowest index.
pub fn greedy_allocate(posterior: &PosteriorState, budget: u32) -> Result<AllocationVector> {
    let curves = curves_of(posterior);
    if curves.is_empty() {
        return Err(Error::invalid("posterior", "needs at least one region"));
    }
    if budget == 0 {
        return Err(Error::invalid("budget", "must be at least 1"));
    }
    let counts = GreedyPlanner::new().allocate(&curves, budget);
    AllocationVector::new(counts, budget)
}

/// Reusable allocator with warm-start state for day-over-day calls.
///
/// The warm state only seeds the cutoff bracket; the returned allocation is
/// the exact greedy optimum regardless.
#[derive(Debug, Clone, Default)]
pub(crate) struct GreedyPlanner {
    last_cutoff: Option<f64>,
    scratch: Vec<u32>,
}

/// Below this work bound the literal unit loop is fastest.
const UNIT_PATH_MAX_WORK: u64 = 1 << 14;
/// Leave at most this many tests to the finishing unit loop.
const FINISH_CAP: u32 = 64;

impl GreedyPlanner {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn allocate(&mut self, curves: &[RewardCurve], budget: u32) -> Vec<u32> {
        debug_assert!(!curves.is_empty() && budget > 0);
        if curves.len() == 1 {
            return vec![budget];
        }
        if u64::from(budget) * curves.len() as u64 <= UNIT_PATH_MAX_WORK {
            let mut counts = vec![0u32; curves.len()];
            allocate_units(curves, budget, &mut counts);
            return counts;
        }
        self.allocate_threshold(curves, budget)
    }

    fn allocate_threshold(&mut self, curves: &[RewardCurve], budget: u32) -> Vec<u32> {
        let k = curves.len();
        // Bracket the cutoff: lo admits more than the budget, hi at most it.
        let top = curves
            .iter()
            .map(|r| r.unit_gain(1))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut lo = 0.0_f64;
        let mut hi = top * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        if let Some(last) = self.last_cutoff {
            // Try a narrow bracket around yesterday's cutoff first.
            let (wlo, whi) = (last * 0.98, last * 1.02);
            if whi < hi && units_at_cutoff(curves, whi, budget, None) <= budget {
                hi = whi;
                if units_at_cutoff(curves, wlo, budget, None) > budget {
                    lo = wlo;
                }
            }
        }

        self.scratch.clear();
        self.scratch.resize(k, 0);
        let mut allocated = units_at_cutoff(curves, hi, budget, Some(&mut self.scratch));
        debug_assert!(allocated <= budget);
        for _ in 0..64 {
            if budget - allocated <= FINISH_CAP {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // bracket exhausted at f64 resolution
            }
            let m = units_at_cutoff(curves, mid, budget, None);
            if m <= budget {
                hi = mid;
                allocated = units_at_cutoff(curves, hi, budget, Some(&mut self.scratch));
            } else {
                lo = mid;
            }
        }
        self.last_cutoff = Some(hi);

        let mut counts = self.scratch.clone();
        allocate_units(curves, budget - allocated, &mut counts);
        counts
    }
}

/// One-test-at-a-time greedy, continuing from `counts`.
fn allocate_units(curves: &[RewardCurve], remaining: u32, counts: &mut [u32]) {
    if remaining == 0 {
        return;
    }
    let mut gains: Vec<f64> = curves
        .iter()
        .zip(counts.iter())
        .map(|(r, &c)| r.unit_gain(c + 1))
        .collect();
    // Cache f's exploration term at the current count to spend one sqrt per
    // allocated test instead of two.
    let mut risk_cur: Vec<f64> = curves
        .iter()
        .zip(counts.iter())
        .map(|(r, &c)| r.risk(f64::from(c)))
        .collect();
    let mut risk_next: Vec<f64> = curves
        .iter()
        .zip(counts.iter())
        .map(|(r, &c)| r.risk(f64::from(c) + 1.0))
        .collect();
    for (i, g) in gains.iter_mut().enumerate() {
        *g = curves[i].mean + risk_next[i] - risk_cur[i];
    }
    for _ in 0..remaining {
        let mut best = 0usize;
        let mut best_gain = gains[0];
        for (i, &g) in gains.iter().enumerate().skip(1) {
            if g > best_gain {
                best = i;
                best_gain = g;
            }
        }
        counts[best] += 1;
        risk_cur[best] = risk_next[best];
        risk_next[best] = curves[best].risk(f64::from(counts[best]) + 1.0);
        gains[best] = curves[best].mean + risk_next[best] - risk_cur[best];
    }
}

/// Number of tests whose marginal gain is `>= cutoff`, capped per region at
/// `cap`; returns early once the total exceeds `cap` when only the
/// comparison matters. With `counts` given, stores the per-region numbers.
fn units_at_cutoff(
    curves: &[RewardCurve],
    cutoff: f64,
    cap: u32,
    mut counts: Option<&mut Vec<u32>>,
) -> u32 {
    let mut total: u32 = 0;
    for (i, r) in curves.iter().enumerate() {
        let n = region_units_at_cutoff(r, cutoff, cap);
        if let Some(counts) = counts.as_deref_mut() {
            counts[i] = n;
        } else if u64::from(total) + u64::from(n) > u64::from(cap) {
            return cap + 1; // enough to know the cutoff is too low
        }
        total = total.saturating_add(n).min(cap.saturating_add(1));
    }
    total
}

/// Largest `n <= cap` with `unit_gain(n) >= cutoff` (0 if none): the prefix
/// of this region's decreasing marginal sequence above the cutoff.
fn region_units_at_cutoff(curve: &RewardCurve, cutoff: f64, cap: u32) -> u32 {
    if curve.unit_gain(1) < cutoff {
        return 0;
    }
    if curve.unit_gain(cap) >= cutoff {
        return cap;
    }
    let (mut lo, mut hi) = (1u32, cap); // gain(lo) >= cutoff > gain(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if curve.unit_gain(mid) >= cutoff {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Enumeration oracle: tries every composition of the budget over the
/// regions and returns a maximizer. Guarded to tiny instances.
pub fn brute_force_allocate(posterior: &PosteriorState, budget: u32) -> Result<AllocationVector> {
    const MAX_REGIONS: usize = 6;
    const MAX_BUDGET: u32 = 15;
    let k = posterior.num_regions();
    if k == 0 {
        return Err(Error::invalid("posterior", "needs at least one region"));
    }
    if budget == 0 {
        return Err(Error::invalid("budget", "must be at least 1"));
    }
    if k > MAX_REGIONS || budget > MAX_BUDGET {
        return Err(Error::InstanceTooLarge {
            regions: k,
            budget,
            max_regions: MAX_REGIONS,
            max_budget: MAX_BUDGET,
        });
    }
    let curves = curves_of(posterior);
    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut current = vec![0u32; k];
    enumerate(&curves, budget, 0, 0.0, &mut current, &mut best);
    let (_, counts) = best.expect("at least one composition exists");
    AllocationVector::new(counts, budget)
}

fn enumerate(
    curves: &[RewardCurve],
    remaining: u32,
    region: usize,
    value_so_far: f64,
    current: &mut Vec<u32>,
    best: &mut Option<(f64, Vec<u32>)>,
) {
    if region == curves.len() - 1 {
        current[region] = remaining;
        let total = value_so_far + curves[region].value(remaining);
        if best.as_ref().is_none_or(|(v, _)| total > *v) {
            *best = Some((total, current.clone()));
        }
        return;
    }
    for c in 0..=remaining {
        current[region] = c;
        enumerate(
            curves,
            remaining - c,
            region + 1,
            value_so_far + curves[region].value(c),
            current,
            best,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{posterior_init, PriorConfig};
    use crate::testutil::{assert_close, assert_rel_close};
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    /// Builds a posterior with explicit per-region Beta parameters.
    fn posterior_with(params: &[(f64, f64)]) -> PosteriorState {
        // posterior_init gives the prior everywhere; nudge via from_parts by
        // re-deriving: easiest is a prior per call, so construct manually
        // through the public surface: start at Beta(a,b) == requested.
        // Regions with differing parameters are produced by folding fake
        // observations is overkill; instead exploit that PriorConfig is
        // per-state uniform and build state from history of one batch.
        use crate::model::ObservationBatch;
        use crate::posterior::posterior_from_history;
        // Choose prior (a0, b0) = min over params, then one unweighted batch
        // lifting each region to the target. Requires integer differences,
        // so tests below use integer-friendly parameters.
        let a0 = params.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let b0 = params.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let prior = PriorConfig::new(a0, b0, 1.0).unwrap();
        let tests: Vec<u32> = params
            .iter()
            .map(|&(a, b)| ((a - a0) + (b - b0)).round() as u32)
            .collect();
        let positives: Vec<u32> = params.iter().map(|&(a, _)| (a - a0).round() as u32).collect();
        if tests.iter().all(|&t| t == 0) {
            return posterior_init(&prior, params.len());
        }
        let budget: u32 = tests.iter().sum();
        let batch = ObservationBatch::new(
            1,
            AllocationVector::new(tests, budget).unwrap(),
            positives,
        )
        .unwrap();
        posterior_from_history(&prior, params.len(), &[batch]).unwrap()
    }

    #[test]
    fn reward_frozen_values() {
        assert_eq!(reward(0, 3.0, 7.0).unwrap(), 0.0);
        assert_close(reward(1, 1.0, 1.0).unwrap(), 1.0, 1e-12);
        assert_close(reward(2, 3.0, 1.0).unwrap(), 1.5 + 0.45_f64.sqrt(), 1e-12);
        assert_close(reward(2, 3.0, 1.0).unwrap(), 2.17082, 1e-5);
    }

    #[test]
    fn reward_rejects_nonpositive_beta() {
        assert!(reward(1, 0.0, 1.0).is_err());
        assert!(reward(1, 1.0, -2.0).is_err());
        assert!(reward_increment(1, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn increment_frozen_values() {
        assert_close(reward_increment(0, 1.0, 1.0).unwrap(), 1.0, 1e-12);
        assert_close(reward_increment(1, 3.0, 1.0).unwrap(), 0.98781, 1e-5);
    }

    #[test]
    fn increments_positive_and_non_increasing() {
        for &(a, b) in &[(1.0, 1.0), (19.5, 1930.5), (0.01, 9999.0), (500.0, 2.0)] {
            let mut prev = f64::INFINITY;
            for c in 0..1000 {
                let g = reward_increment(c, a, b).unwrap();
                assert!(g > 0.0, "increment must be positive (a={a}, b={b}, c={c})");
                assert!(
                    g <= prev + 1e-12,
                    "increment must be non-increasing (a={a}, b={b}, c={c})"
                );
                prev = g;
            }
        }
    }

    #[test]
    fn greedy_small_instance_matches_brute_force() {
        let posterior = posterior_with(&[(3.0, 1.0), (1.0, 3.0)]);
        let greedy = greedy_allocate(&posterior, 2).unwrap();
        assert_eq!(greedy.counts(), &[2, 0]);
        let brute = brute_force_allocate(&posterior, 2).unwrap();
        assert_close(
            allocation_objective(&posterior, &greedy),
            allocation_objective(&posterior, &brute),
            1e-12,
        );
        assert_close(allocation_objective(&posterior, &greedy), 2.17082, 1e-5);
    }

    #[test]
    fn greedy_symmetric_regions_split_evenly() {
        let prior = PriorConfig::new(19.5, 1930.5, 0.3).unwrap();
        let posterior = posterior_init(&prior, 39);
        let allocation = greedy_allocate(&posterior, 3900).unwrap();
        assert!(allocation.counts().iter().all(|&c| c == 100));
    }

    #[test]
    fn greedy_tie_break_prefers_low_index() {
        let posterior = posterior_with(&[(2.0, 2.0), (2.0, 2.0), (2.0, 2.0)]);
        let allocation = greedy_allocate(&posterior, 4).unwrap();
        assert_eq!(allocation.counts(), &[2, 1, 1]);
    }

    #[test]
    fn single_region_takes_everything() {
        let posterior = posterior_with(&[(1.0, 1.0)]);
        assert_eq!(brute_force_allocate(&posterior, 9).unwrap().counts(), &[9]);
        assert_eq!(greedy_allocate(&posterior, 9).unwrap().counts(), &[9]);
    }

    #[test]
    fn symmetric_two_regions_tie_objective() {
        let posterior = posterior_with(&[(2.0, 5.0), (2.0, 5.0)]);
        let one = AllocationVector::new(vec![1, 0], 1).unwrap();
        let other = AllocationVector::new(vec![0, 1], 1).unwrap();
        assert_eq!(
            allocation_objective(&posterior, &one),
            allocation_objective(&posterior, &other)
        );
    }

    #[test]
    fn brute_force_guards_large_instances() {
        let posterior = posterior_with(&[(1.0, 1.0); 7]);
        assert!(matches!(
            brute_force_allocate(&posterior, 3),
            Err(Error::InstanceTooLarge { .. })
        ));
        let posterior = posterior_with(&[(1.0, 1.0); 2]);
        assert!(brute_force_allocate(&posterior, 16).is_err());
    }

    #[test]
    fn greedy_matches_brute_force_on_random_instances() {
        let mut rng = SmallRng::seed_from_u64(7);
        for _ in 0..200 {
            let k = rng.random_range(1..=6usize);
            let budget = rng.random_range(1..=15u32);
            let params: Vec<(f64, f64)> = (0..k)
                .map(|_| {
                    (
                        rng.random_range(0.01..100.0f64),
                        rng.random_range(0.01..100.0f64),
                    )
                })
                .collect();
            let curves: Vec<RewardCurve> = params
                .iter()
                .map(|&(a, b)| RewardCurve::from_beta(a, b))
                .collect();
            let mut counts = vec![0u32; k];
            allocate_units(&curves, budget, &mut counts);
            let unit_obj: f64 = curves
                .iter()
                .zip(&counts)
                .map(|(r, &c)| r.value(c))
                .sum();

            // brute force over the same curves
            let mut best: Option<(f64, Vec<u32>)> = None;
            let mut current = vec![0u32; k];
            enumerate(&curves, budget, 0, 0.0, &mut current, &mut best);
            let (brute_obj, _) = best.unwrap();
            assert_rel_close(unit_obj, brute_obj, 1e-9);
        }
    }

    #[test]
    fn threshold_path_equals_unit_path() {
        let mut rng = SmallRng::seed_from_u64(11);
        for trial in 0..60 {
            let k = rng.random_range(2..=40usize);
            let budget = rng.random_range(500..=6000u32);
            let curves: Vec<RewardCurve> = (0..k)
                .map(|_| {
                    RewardCurve::from_beta(
                        rng.random_range(0.05..400.0f64),
                        rng.random_range(0.05..4000.0f64),
                    )
                })
                .collect();
            let mut unit = vec![0u32; k];
            allocate_units(&curves, budget, &mut unit);
            let mut planner = GreedyPlanner::new();
            let fast = planner.allocate_threshold(&curves, budget);
            assert_eq!(
                fast.iter().map(|&c| u64::from(c)).sum::<u64>(),
                u64::from(budget)
            );
            let unit_obj: f64 = curves.iter().zip(&unit).map(|(r, &c)| r.value(c)).sum();
            let fast_obj: f64 = curves.iter().zip(&fast).map(|(r, &c)| r.value(c)).sum();
            assert_rel_close(fast_obj, unit_obj, 1e-12);
            // warm second call over perturbed curves must stay exact
            let curves2: Vec<RewardCurve> = curves
                .iter()
                .map(|r| {
                    RewardCurve::from_beta(
                        (r.mean * r.strength * rng.random_range(0.9..1.1)).max(0.01),
                        ((1.0 - r.mean) * r.strength).max(0.01),
                    )
                })
                .collect();
            let mut unit2 = vec![0u32; k];
            allocate_units(&curves2, budget, &mut unit2);
            let fast2 = planner.allocate_threshold(&curves2, budget);
            let unit2_obj: f64 = curves2.iter().zip(&unit2).map(|(r, &c)| r.value(c)).sum();
            let fast2_obj: f64 = curves2.iter().zip(&fast2).map(|(r, &c)| r.value(c)).sum();
            assert_rel_close(fast2_obj, unit2_obj, 1e-12);
            let _ = trial;
        }
    }

    #[test]
    fn higher_mean_gets_at_least_as_many_tests() {
        // Equal strength, different means.
        let posterior = posterior_with(&[(30.0, 70.0), (10.0, 90.0)]);
        let allocation = greedy_allocate(&posterior, 40).unwrap();
        assert!(allocation.counts()[0] >= allocation.counts()[1]);
    }

    #[test]
    fn budget_always_exhausted() {
        let posterior = posterior_with(&[(3.0, 9.0), (1.0, 1.0), (20.0, 400.0)]);
        for budget in [1u32, 7, 100, 5000] {
            let allocation = greedy_allocate(&posterior, budget).unwrap();
            let sum: u64 = allocation.counts().iter().map(|&c| u64::from(c)).sum();
            assert_eq!(sum, u64::from(budget));
        }
    }
}
