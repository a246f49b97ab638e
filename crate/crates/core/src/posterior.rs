// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exponentially weighted Beta posteriors of the per-region rates.
//!
//! Observations are discounted geometrically: a day that is `d` days old
//! carries weight `w^d`. With a `Beta(a, b)` prior the weighted posterior
//! after `T` days is
//!
//! ```text
//! alpha_k = a + sum_t X_{k,t}             * w^(T-t)
//! beta_k  = b + sum_t (c_{k,t} - X_{k,t}) * w^(T-t)
//! ```
//!
//! The prior itself is never discounted. The production path maintains this
//! recursively in O(K) per day (`update`); the direct summation
//! (`posterior_from_history`) is retained as the test oracle.

use crate::error::{Error, Result};
use crate::model::ObservationBatch;

/// Beta prior hyperparameters plus the per-day decay weight `w`.
///
/// `w = 1` is the ordinary (unweighted) conjugate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    a: f64,
    b: f64,
    decay: f64,
}

impl PriorConfig {
    pub fn new(a: f64, b: f64, decay: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid("prior.a", format!("{a} is not positive")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid("prior.b", format!("{b} is not positive")));
        }
        if !(decay.is_finite() && 0.0 < decay && decay <= 1.0) {
            return Err(Error::invalid(
                "prior.decay",
                format!("{decay} is not in (0, 1]"),
            ));
        }
        Ok(Self { a, b, decay })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Prior mean `a / (a + b)`.
    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

/// Per-region `Beta(alpha_k, beta_k)` parameters after `time` days.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    time: u64,
}

impl PosteriorState {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn num_regions(&self) -> usize {
        self.alpha.len()
    }

    /// Posterior mean and variance of region `k`'s rate.
    pub fn moments(&self, k: usize) -> (f64, f64) {
        let (a, b) = (self.alpha[k], self.beta[k]);
        let s = a + b;
        (a / s, a * b / (s * s * (s + 1.0)))
    }
}

/// All regions start at the prior.
pub fn posterior_init(prior: &PriorConfig, num_regions: usize) -> PosteriorState {
    PosteriorState {
        alpha: vec![prior.a; num_regions],
        beta: vec![prior.b; num_regions],
        time: 0,
    }
}

/// Folds one day of observations into the weighted posterior:
/// `alpha' = a + w (alpha - a) + X`, `beta' = b + w (beta - b) + (c - X)`.
/// Algebraically identical to re-summing the discounted history.
pub fn posterior_update(
    state: &PosteriorState,
    batch: &ObservationBatch,
    prior: &PriorConfig,
) -> Result<PosteriorState> {
    if batch.num_regions() != state.num_regions() {
        return Err(Error::DimensionMismatch {
            expected: state.num_regions(),
            actual: batch.num_regions(),
        });
    }
    if batch.time() != state.time + 1 {
        return Err(Error::TimeMismatch {
            state: state.time,
            batch: batch.time(),
        });
    }
    let w = prior.decay;
    let alpha = state
        .alpha
        .iter()
        .zip(batch.positives())
        .map(|(&a_k, &x)| prior.a + w * (a_k - prior.a) + f64::from(x))
        .collect();
    let beta = state
        .beta
        .iter()
        .zip(batch.tests().counts().iter().zip(batch.positives()))
        .map(|(&b_k, (&c, &x))| prior.b + w * (b_k - prior.b) + f64::from(c - x))
        .collect();
    Ok(PosteriorState {
        alpha,
        beta,
        time: batch.time(),
    })
}

/// Direct (non-recursive) evaluation of the weighted posterior from a full
/// history. Batches must cover days `1..=T` contiguously and in order.
pub fn posterior_from_history(
    prior: &PriorConfig,
    num_regions: usize,
    history: &[ObservationBatch],
) -> Result<PosteriorState> {
    for (i, batch) in history.iter().enumerate() {
        if batch.time() != i as u64 + 1 {
            return Err(Error::invalid(
                "history",
                format!(
                    "batches must cover days 1..={} in order; position {i} has day {}",
                    history.len(),
                    batch.time()
                ),
            ));
        }
        if batch.num_regions() != num_regions {
            return Err(Error::DimensionMismatch {
                expected: num_regions,
                actual: batch.num_regions(),
            });
        }
    }
    let horizon = history.len() as u64;
    let mut alpha = vec![prior.a; num_regions];
    let mut beta = vec![prior.b; num_regions];
    for batch in history {
        let weight = prior.decay.powi((horizon - batch.time()) as i32);
        for (k, (&c, &x)) in batch
            .tests()
            .counts()
            .iter()
            .zip(batch.positives())
            .enumerate()
        {
            alpha[k] += f64::from(x) * weight;
            beta[k] += f64::from(c - x) * weight;
        }
    }
    Ok(PosteriorState {
        alpha,
        beta,
        time: horizon,
    })
}
