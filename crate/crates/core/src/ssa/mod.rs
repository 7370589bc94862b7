//! Gillespie direct-method simulation, snapshot dataset generation and
//! empirical histograms for validating CME solutions.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsp::{FidelityBound, TruncatedStateSpace};
use crate::likelihood::SnapshotDataset;
use crate::model::{apply_stoichiometry, eval_propensity, linear, PropensityExpr, Reaction, ReactionNetwork};
use crate::stmcmc::rng::{stream, StreamPurpose};

/// Schema version written into snapshot manifests.
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    /// Left the bounding box; the surrogate process stops there.
    Frozen,
}

/// A piecewise-constant sample path. `states[i]` holds on `[times[i], times[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<i64>>,
    pub t_final: f64,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn num_jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// State at time `t` (the last jump at or before `t`).
    pub fn state_at(&self, t: f64) -> &[i64] {
        let k = self.times.partition_point(|&s| s <= t);
        &self.states[k.saturating_sub(1)]
    }

    pub fn final_state(&self) -> &[i64] {
        self.states.last().expect("trajectory has an initial state")
    }
}

/// Upper bound on a reaction's propensity that holds until the state changes.
fn majorant(r: &Reaction, x: &[i64], theta: &[f64]) -> f64 {
    let time_bound = match &r.propensity {
        PropensityExpr::TimeVaryingMax { base, .. } => linear(theta[*base]),
        _ => 1.0,
    };
    time_bound * r.state_factor(x, theta)
}

fn choose(props: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &a) in props.iter().enumerate() {
        if a > 0.0 {
            acc += a;
            last = j;
            if target < acc {
                return j;
            }
        }
    }
    last
}

/// Simulates one path on `[0, t_final]` from `x0`.
///
/// With a `bound`, the path stops at the first state outside the box and is
/// marked frozen. Up to that point it coincides with the unbounded path drawn
/// from the same stream. Time-varying propensities are handled by thinning.
pub fn ssa_simulate(
    net: &ReactionNetwork,
    theta: &[f64],
    t_final: f64,
    x0: &[i64],
    rng: &mut impl Rng,
    bound: Option<&FidelityBound>,
) -> Result<Trajectory> {
    net.check_theta(theta)?;
    if x0.len() != net.num_species() || x0.iter().any(|&v| v < 0) {
        return Err(Error::model(format!("invalid initial state {x0:?}")));
    }
    if !(t_final >= 0.0) {
        return Err(Error::model(format!("invalid final time {t_final}")));
    }
    let autonomous = !net.is_time_varying();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.to_vec()],
        t_final,
        status: TrajectoryStatus::Completed,
    };
    if let Some(b) = bound {
        if !b.contains(x0) {
            traj.status = TrajectoryStatus::Frozen;
            return Ok(traj);
        }
    }
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut upper = vec![0.0; net.reactions.len()];
    let mut props = vec![0.0; net.reactions.len()];
    loop {
        for (u, r) in upper.iter_mut().zip(&net.reactions) {
            *u = if r.can_fire(&x) { majorant(r, &x, theta) } else { 0.0 };
        }
        let total_upper: f64 = upper.iter().sum();
        if !(total_upper > 0.0) {
            if total_upper.is_nan() {
                return Err(Error::model(format!("propensity is NaN at state {x:?}")));
            }
            break;
        }
        let tau: f64 = Exp1.sample(rng);
        t += tau / total_upper;
        if t > t_final {
            break;
        }
        let j = if autonomous {
            choose(&upper, total_upper, rng)
        } else {
            for (p, r) in props.iter_mut().zip(&net.reactions) {
                *p = if r.can_fire(&x) { eval_propensity(r, &x, theta, t)? } else { 0.0 };
            }
            let total: f64 = props.iter().sum();
            if rng.random::<f64>() * total_upper >= total {
                continue;
            }
            choose(&props, total, rng)
        };
        x = apply_stoichiometry(&x, &net.reactions[j]);
        traj.times.push(t);
        traj.states.push(x.clone());
        if let Some(b) = bound {
            if !b.contains(&x) {
                traj.status = TrajectoryStatus::Frozen;
                break;
            }
        }
    }
    Ok(traj)
}

/// Draws an initial state from the network's initial distribution.
pub fn sample_initial_state(net: &ReactionNetwork, rng: &mut impl Rng) -> Vec<i64> {
    if net.initial.len() == 1 {
        return net.initial[0].0.clone();
    }
    let total: f64 = net.initial.iter().map(|(_, p)| p).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (x, p) in &net.initial {
        acc += p;
        if u < acc {
            return x.clone();
        }
    }
    net.initial.last().expect("initial distribution is nonempty").0.clone()
}

/// Provenance of a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub format_version: u32,
    pub model: String,
    pub theta_true: Vec<f64>,
    pub seed: u64,
    pub times: Vec<f64>,
    pub n_cells: usize,
}

/// Simulates `n_cells` independent cells at each time. Cell `c` at time
/// index `k` uses its own random stream, so the dataset depends only on the
/// seed.
pub fn generate_snapshot_dataset(
    net: &ReactionNetwork,
    theta_true: &[f64],
    times: &[f64],
    n_cells: usize,
    seed: u64,
) -> Result<(SnapshotDataset, SnapshotManifest)> {
    if n_cells == 0 {
        return Err(Error::config("n_cells must be at least 1"));
    }
    net.check_theta(theta_true)?;
    let observed = net.observed.clone();
    let mut cells = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let group: Vec<Vec<i64>> = (0..n_cells as u64)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(seed, k as u64, c, StreamPurpose::Simulation);
                let x0 = sample_initial_state(net, &mut rng);
                let traj = ssa_simulate(net, theta_true, t, &x0, &mut rng, None)?;
                let x = traj.state_at(t);
                Ok(observed.iter().map(|&s| x[s]).collect())
            })
            .collect::<Result<_>>()?;
        cells.push(group);
    }
    let names = observed.iter().map(|&s| net.species[s].name.clone()).collect();
    let data = SnapshotDataset::new(times.to_vec(), cells, observed, names)?;
    let manifest = SnapshotManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        model: net.name.clone(),
        theta_true: theta_true.to_vec(),
        seed,
        times: times.to_vec(),
        n_cells,
    };
    Ok((data, manifest))
}

/// Normalized histogram of full-state samples on `space`. Coordinates are
/// clamped to the space's bound first; samples still outside the space are
/// dropped, so the result sums to the fraction that landed inside.
pub fn empirical_histogram(cells: &[Vec<i64>], space: &TruncatedStateSpace) -> Vec<f64> {
    let mut h = vec![0.0; space.len()];
    if cells.is_empty() {
        return h;
    }
    let bound = space.bound();
    let w = 1.0 / cells.len() as f64;
    for c in cells {
        let clamped: Vec<i64> = c.iter().zip(&bound.0).map(|(&v, &b)| v.min(b)).collect();
        if let Some(i) = space.index_of(&clamped) {
            h[i] += w;
        }
    }
    h
}

/// Total-variation distance `0.5 * sum |p - q|` between two vectors on the
/// same support plus whatever mass either leaves off it.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let diff: f64 = (0..n).map(|i| (get(p, i) - get(q, i)).abs()).sum();
    let missing_p = (1.0 - p.iter().sum::<f64>()).max(0.0);
    let missing_q = (1.0 - q.iter().sum::<f64>()).max(0.0);
    0.5 * (diff + (missing_p - missing_q).abs())
}
