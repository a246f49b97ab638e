// SPDX-License-Identifier: MIT OR Apache-2.0

//! The three allocation policies compared in the benchmark study.

use crate::error::{Error, Result};
use crate::model::CusumState;
use crate::planner::{greedy_allocate, AllocationVector};
use crate::posterior::PosteriorState;

/// Which allocator drives the daily test distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocatorPolicy {
    /// Adaptive allocation: greedy optimum of the UCB reward over the
    /// current posterior.
    Ara,
    /// Uniform split, remainder to the lowest indices; ignores all state.
    Even,
    /// The budget is cut into `num_batches` equal batches; batch `i` goes to
    /// the region ranked `i % top_r` by the previous day's CUSUM statistic
    /// (ties toward the lower index).
    TopR { num_batches: u32, top_r: u32 },
}

impl AllocatorPolicy {
    /// The benchmark's default Top-R parameterization: 20 batches over the
    /// top 20 regions.
    pub fn top_r_default() -> Self {
        AllocatorPolicy::TopR {
            num_batches: 20,
            top_r: 20,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AllocatorPolicy::Ara => "ara",
            AllocatorPolicy::Even => "even",
            AllocatorPolicy::TopR { .. } => "top_r",
        }
    }

    pub(crate) fn validate(&self, num_regions: usize, budget: u32) -> Result<()> {
        if let AllocatorPolicy::TopR { num_batches, top_r } = self {
            if *num_batches == 0 {
                return Err(Error::invalid("policy.num_batches", "must be at least 1"));
            }
            if *top_r == 0 {
                return Err(Error::invalid("policy.top_r", "must be at least 1"));
            }
            if *top_r as usize > num_regions {
                return Err(Error::invalid(
                    "policy.top_r",
                    format!("{top_r} exceeds the region count {num_regions}"),
                ));
            }
            if budget % num_batches != 0 {
                return Err(Error::invalid(
                    "policy.num_batches",
                    format!("budget {budget} is not divisible by {num_batches} batches"),
                ));
            }
        }
        Ok(())
    }
}

/// Produces the next day's allocation under the chosen policy.
pub fn allocate(
    policy: &AllocatorPolicy,
    cusum: &CusumState,
    posterior: &PosteriorState,
    budget: u32,
) -> Result<AllocationVector> {
    let num_regions = posterior.num_regions();
    if cusum.num_regions() != num_regions {
        return Err(Error::DimensionMismatch {
            expected: num_regions,
            actual: cusum.num_regions(),
        });
    }
    policy.validate(num_regions, budget)?;
    match policy {
        AllocatorPolicy::Ara => greedy_allocate(posterior, budget),
        AllocatorPolicy::Even => even_allocation(num_regions, budget),
        AllocatorPolicy::TopR { num_batches, top_r } => {
            let ranked = rank_by_stat(cusum.stats());
            top_r_allocation(&ranked, num_regions, budget, *num_batches, *top_r)
        }
    }
}

/// `floor(C/K)` everywhere, the remainder one test each to the lowest
/// indices.
pub fn even_allocation(num_regions: usize, budget: u32) -> Result<AllocationVector> {
    if num_regions == 0 {
        return Err(Error::invalid("num_regions", "must be at least 1"));
    }
    let k = num_regions as u32;
    let base = budget / k;
    let remainder = (budget % k) as usize;
    let counts = (0..num_regions)
        .map(|i| base + u32::from(i < remainder))
        .collect();
    AllocationVector::new(counts, budget)
}

/// Region indices sorted by statistic descending, lowest index first on ties.
fn rank_by_stat(stats: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&i, &j| stats[j].total_cmp(&stats[i]).then(i.cmp(&j)));
    order
}

fn top_r_allocation(
    ranked: &[usize],
    num_regions: usize,
    budget: u32,
    num_batches: u32,
    top_r: u32,
) -> Result<AllocationVector> {
    let batch_size = budget / num_batches;
    let mut counts = vec![0u32; num_regions];
    for batch in 0..num_batches {
        let slot = (batch % top_r) as usize;
        counts[ranked[slot]] += batch_size;
    }
    AllocationVector::new(counts, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{posterior_init, PriorConfig};

    fn cusum_with(stats: Vec<f64>) -> CusumState {
        // build through the public API: start at zero and verify via stats()
        // is impossible without observations, so test ranking separately and
        // exercise `allocate` with a zero state where ranking is trivial.
        let state = CusumState::new(stats.len());
        assert_eq!(state.stats().len(), stats.len());
        state
    }

    fn posterior(k: usize) -> PosteriorState {
        posterior_init(&PriorConfig::new(19.5, 1930.5, 0.3).unwrap(), k)
    }

    #[test]
    fn even_paper_scale() {
        let allocation = even_allocation(39, 3900).unwrap();
        assert!(allocation.counts().iter().all(|&c| c == 100));
    }

    #[test]
    fn even_remainder_goes_to_lowest_indices() {
        let allocation = even_allocation(3, 5).unwrap();
        assert_eq!(allocation.counts(), &[2, 2, 1]);
    }

    #[test]
    fn even_ignores_state() {
        let p = posterior(4);
        let a = allocate(&AllocatorPolicy::Even, &cusum_with(vec![0.0; 4]), &p, 10).unwrap();
        let b = allocate(&AllocatorPolicy::Even, &cusum_with(vec![0.0; 4]), &p, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts(), &[3, 3, 2, 2]);
    }

    #[test]
    fn ranking_is_descending_with_index_ties() {
        assert_eq!(rank_by_stat(&[0.5, 2.0, 2.0, -1.0]), vec![1, 2, 0, 3]);
        assert_eq!(rank_by_stat(&[0.0, 0.0, 0.0]), vec![0, 1, 2]);
    }

    #[test]
    fn top_r_paper_scale() {
        // 3900 tests, 20 batches of 195, each to one of the top 20 regions.
        let ranked: Vec<usize> = (0..39).collect();
        let allocation = top_r_allocation(&ranked, 39, 3900, 20, 20).unwrap();
        let support: Vec<usize> = allocation
            .counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(support, (0..20).collect::<Vec<_>>());
        assert!(support.iter().all(|&i| allocation.counts()[i] == 195));
    }

    #[test]
    fn top_r_equal_stats_selects_lowest_indices() {
        let p = posterior(5);
        let allocation = allocate(
            &AllocatorPolicy::TopR {
                num_batches: 2,
                top_r: 2,
            },
            &cusum_with(vec![0.0; 5]),
            &p,
            10,
        )
        .unwrap();
        assert_eq!(allocation.counts(), &[5, 5, 0, 0, 0]);
    }

    #[test]
    fn top_r_more_batches_than_regions_cycles() {
        let ranked = vec![2, 0, 1];
        let allocation = top_r_allocation(&ranked, 3, 30, 3, 2).unwrap();
        // batches of 10: slots 0,1,0 -> region 2 twice, region 0 once
        assert_eq!(allocation.counts(), &[10, 0, 20]);
    }

    #[test]
    fn top_r_rejects_bad_parameters() {
        let p = posterior(5);
        let c = cusum_with(vec![0.0; 5]);
        assert!(allocate(
            &AllocatorPolicy::TopR {
                num_batches: 7,
                top_r: 2
            },
            &c,
            &p,
            10
        )
        .is_err()); // 10 % 7 != 0
        assert!(allocate(
            &AllocatorPolicy::TopR {
                num_batches: 2,
                top_r: 6
            },
            &c,
            &p,
            10
        )
        .is_err()); // top_r > K
    }

    #[test]
    fn every_policy_exhausts_budget() {
        let p = posterior(7);
        let c = cusum_with(vec![0.0; 7]);
        for policy in [
            AllocatorPolicy::Ara,
            AllocatorPolicy::Even,
            AllocatorPolicy::TopR {
                num_batches: 3,
                top_r: 4,
            },
        ] {
            let allocation = allocate(&policy, &c, &p, 21).unwrap();
            let sum: u32 = allocation.counts().iter().sum();
            assert_eq!(sum, 21, "policy {:?}", policy.name());
        }
    }
}
