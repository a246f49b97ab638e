// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

//! Adaptive resource allocation CUSUM for binomial count monitoring.
//!
//! A fixed daily budget of `C` tests is spread over `K` regions to detect,
//! as quickly as possible, the region whose positive rate shifts from `p`
//! to `q > p`. Three pieces cooperate:
//!
//! * [`model`] — the binomial observation model and per-region CUSUM
//!   statistics with the alarm rule;
//! * [`posterior`] — exponentially weighted Beta posteriors of each
//!   region's rate;
//! * [`planner`] / [`policy`] — the UCB reward and the greedy integer
//!   allocation of the daily budget, next to the `Even` and `Top-R`
//!   benchmark policies.
//!
//! On top of those, [`sim`] runs seeded Monte Carlo experiments (run-length
//! metrics, threshold calibration, allocation-behavior studies) and
//! [`replay`] drives the same loop over a CSV of observed daily rates.
//!
//! Replications are data-parallel; with the default `parallel` feature they
//! run on rayon. Results are bit-identical regardless of thread count or
//! whether the feature is enabled, because every replication owns a private
//! ChaCha8 stream derived from the base seed and aggregation is by
//! replication index.

pub mod error;
pub mod model;
pub mod planner;
pub mod policy;
pub mod posterior;
pub mod replay;
pub mod sim;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use model::{
    check_alarm, cusum_step, llr_increment, AlarmReport, CusumState, LlrCoefficients, ModelParams,
    ObservationBatch,
};
pub use planner::{
    allocation_objective, brute_force_allocate, greedy_allocate, reward, reward_increment,
    AllocationVector,
};
pub use policy::{allocate, even_allocation, AllocatorPolicy};
pub use posterior::{
    posterior_from_history, posterior_init, posterior_update, PosteriorState, PriorConfig,
};
pub use replay::{
    load_rate_matrix, replay, ObservationMode, RateMatrix, ReplayAlarm, ReplayReport,
};
pub use sim::{
    arl0_profile, behavior_study, calibrate_threshold, calibrate_threshold_in,
    calibrate_threshold_multi_q, monte_carlo, monte_carlo_sequential, run_once,
    sample_observations, BehaviorStudy, Calibration, MetricsReport, PhaseSummary, RunOutcome,
    SimulationConfig, DEFAULT_BRACKET, GENERATOR_ID,
};
