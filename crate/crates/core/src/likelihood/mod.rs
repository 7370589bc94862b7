//! Snapshot data, fidelity hierarchies and surrogate log-likelihoods.

mod dataset;
mod evaluator;
mod hierarchy;

pub use dataset::SnapshotDataset;
pub use evaluator::{batch_log_likelihood, CmeLikelihood, LikelihoodModel};
pub use hierarchy::ModelHierarchy;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fsp::{solve_cme_adaptive, FidelityBound, FspSolution};
use crate::model::ReactionNetwork;

/// Probabilities are floored here before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Sums the joint distribution at output `k` over the coordinates not listed
/// in `observed`. Negative integrator noise is clamped to zero.
pub fn observed_marginal(sol: &FspSolution, k: usize, observed: &[usize]) -> HashMap<Vec<i64>, f64> {
    let mut out: HashMap<Vec<i64>, f64> = HashMap::new();
    let dist = &sol.distributions[k];
    for (i, x) in sol.space.states().enumerate() {
        let key: Vec<i64> = observed.iter().map(|&s| x[s]).collect();
        *out.entry(key).or_insert(0.0) += dist[i].max(0.0);
    }
    out
}

/// Clamps observed counts elementwise to the bound on the observed species.
pub fn clamp_observation(cell: &[i64], observed: &[usize], bound: &FidelityBound) -> Vec<i64> {
    cell.iter()
        .zip(observed)
        .map(|(&c, &s)| c.min(bound.0[s]))
        .collect()
}

/// Log-likelihood of `data` under a precomputed solution on `bound`.
pub fn log_likelihood_from_solution(sol: &FspSolution, data: &SnapshotDataset, bound: &FidelityBound) -> f64 {
    let observed = data.observed_species();
    let mut total = 0.0;
    let mut floored = 0usize;
    for k in 0..data.times().len() {
        let marginal = observed_marginal(sol, k, observed);
        let mut counts: HashMap<Vec<i64>, usize> = HashMap::new();
        for cell in data.cells_at(k) {
            *counts.entry(clamp_observation(cell, observed, bound)).or_insert(0) += 1;
        }
        // sorted keys give a summation order independent of hashing
        let mut keys: Vec<_> = counts.into_iter().collect();
        keys.sort_unstable();
        for (key, n) in keys {
            let p = marginal.get(&key).copied().unwrap_or(0.0);
            if p < PROBABILITY_FLOOR {
                floored += n;
            }
            total += n as f64 * p.max(PROBABILITY_FLOOR).ln();
        }
    }
    if floored > 0 {
        log::debug!("{floored} observations fell below the probability floor");
    }
    total
}

/// Log-likelihood under the surrogate at `level`. Solver failures (capacity or
/// integrator breakdown) yield negative infinity with a warning.
pub fn surrogate_log_likelihood(
    net: &ReactionNetwork,
    theta: &[f64],
    data: &SnapshotDataset,
    level: usize,
    hier: &ModelHierarchy,
) -> Result<f64> {
    if level >= hier.num_levels() {
        return Err(Error::Contract(format!(
            "fidelity level {level} outside hierarchy of {} levels",
            hier.num_levels()
        )));
    }
    net.check_theta(theta)?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let bound = hier.bound(level);
    match solve_cme_adaptive(net, theta, data.times(), bound, &net.initial, hier.fsp()) {
        Ok(sol) => Ok(log_likelihood_from_solution(&sol, data, bound)),
        Err(e @ (Error::Capacity { .. } | Error::Integrator { .. })) => {
            log::warn!("level {level}: {e}; log-likelihood set to -inf");
            Ok(f64::NEG_INFINITY)
        }
        Err(e) => Err(e),
    }
}

/// The top-fidelity log-likelihood.
pub fn full_log_likelihood(
    net: &ReactionNetwork,
    theta: &[f64],
    data: &SnapshotDataset,
    hier: &ModelHierarchy,
) -> Result<f64> {
    surrogate_log_likelihood(net, theta, data, hier.top(), hier)
}
