use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;

use super::{surrogate_log_likelihood, ModelHierarchy, SnapshotDataset};
use crate::error::Result;
use crate::model::ReactionNetwork;

/// A family of log-likelihoods indexed by fidelity level.
pub trait LikelihoodModel: Sync {
    fn num_levels(&self) -> usize;

    fn log_likelihood(&self, theta: &[f64], level: usize) -> Result<f64>;

    /// Evaluates many parameter vectors on the current rayon pool. The
    /// output order matches the input order.
    fn batch(&self, thetas: &[Vec<f64>], level: usize) -> Result<Vec<f64>> {
        thetas
            .par_iter()
            .map(|t| self.log_likelihood(t, level))
            .collect()
    }

    /// Number of forward solves performed per level, when tracked.
    fn solve_counts(&self) -> Vec<u64> {
        vec![0; self.num_levels()]
    }
}

type CacheKey = (usize, Vec<u64>);

fn key(theta: &[f64], level: usize) -> CacheKey {
    (level, theta.iter().map(|v| v.to_bits()).collect())
}

/// CME-backed likelihood with a per-`(level, theta)` cache and solve counters.
pub struct CmeLikelihood {
    network: ReactionNetwork,
    data: SnapshotDataset,
    hierarchy: ModelHierarchy,
    cache: Mutex<HashMap<CacheKey, f64>>,
    solves: Vec<AtomicU64>,
}

impl CmeLikelihood {
    pub fn new(network: ReactionNetwork, data: SnapshotDataset, hierarchy: ModelHierarchy) -> Result<Self> {
        data.check_network(&network)?;
        if hierarchy.bound(0).len() != network.num_species() {
            return Err(crate::error::Error::config(format!(
                "hierarchy bounds have {} entries but the model has {} species",
                hierarchy.bound(0).len(),
                network.num_species()
            )));
        }
        let solves = (0..hierarchy.num_levels()).map(|_| AtomicU64::new(0)).collect();
        Ok(CmeLikelihood {
            network,
            data,
            hierarchy,
            cache: Mutex::new(HashMap::new()),
            solves,
        })
    }

    pub fn network(&self) -> &ReactionNetwork {
        &self.network
    }

    pub fn data(&self) -> &SnapshotDataset {
        &self.data
    }

    pub fn hierarchy(&self) -> &ModelHierarchy {
        &self.hierarchy
    }

    fn cached(&self, k: &CacheKey) -> Option<f64> {
        self.cache.lock().expect("cache lock").get(k).copied()
    }

    fn solve(&self, theta: &[f64], level: usize) -> Result<f64> {
        self.solves[level].fetch_add(1, Ordering::Relaxed);
        surrogate_log_likelihood(&self.network, theta, &self.data, level, &self.hierarchy)
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }
}

impl LikelihoodModel for CmeLikelihood {
    fn num_levels(&self) -> usize {
        self.hierarchy.num_levels()
    }

    fn log_likelihood(&self, theta: &[f64], level: usize) -> Result<f64> {
        let k = key(theta, level);
        if let Some(v) = self.cached(&k) {
            return Ok(v);
        }
        let v = self.solve(theta, level)?;
        self.cache.lock().expect("cache lock").insert(k, v);
        Ok(v)
    }

    fn batch(&self, thetas: &[Vec<f64>], level: usize) -> Result<Vec<f64>> {
        let keys: Vec<CacheKey> = thetas.iter().map(|t| key(t, level)).collect();
        let mut todo: Vec<usize> = Vec::new();
        {
            let cache = self.cache.lock().expect("cache lock");
            let mut seen = std::collections::HashSet::new();
            for (i, k) in keys.iter().enumerate() {
                if !cache.contains_key(k) && seen.insert(k) {
                    todo.push(i);
                }
            }
        }
        let fresh: Vec<f64> = todo
            .par_iter()
            .map(|&i| self.solve(&thetas[i], level))
            .collect::<Result<_>>()?;
        let mut cache = self.cache.lock().expect("cache lock");
        for (&i, v) in todo.iter().zip(fresh) {
            cache.insert(keys[i].clone(), v);
        }
        Ok(keys.iter().map(|k| cache[k]).collect())
    }

    fn solve_counts(&self) -> Vec<u64> {
        self.solves.iter().map(|c| c.load(Ordering::Relaxed)).collect()
    }
}

/// Evaluates `particles` at `level` using a dedicated pool of `workers` threads.
pub fn batch_log_likelihood<L: LikelihoodModel + ?Sized>(
    model: &L,
    particles: &[Vec<f64>],
    level: usize,
    workers: usize,
) -> Result<Vec<f64>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| crate::error::Error::config(format!("thread pool: {e}")))?;
    pool.install(|| model.batch(particles, level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsp::{AdaptiveFspConfig, FidelityBound};
    use crate::model::library;

    fn setup(max_states: usize) -> CmeLikelihood {
        let m = library::birth_death();
        let data = SnapshotDataset::new(
            vec![1.0, 2.0],
            vec![vec![vec![3], vec![5]], vec![vec![7]]],
            vec![0],
            vec!["X".into()],
        )
        .unwrap();
        let fsp = AdaptiveFspConfig {
            max_states,
            ..AdaptiveFspConfig::default()
        };
        let h = ModelHierarchy::new(
            vec![FidelityBound::new(vec![15]).unwrap(), FidelityBound::new(vec![400]).unwrap()],
            fsp,
        )
        .unwrap();
        CmeLikelihood::new(m.network, data, h).unwrap()
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let l1 = setup(100_000);
        let l4 = setup(100_000);
        let thetas: Vec<Vec<f64>> = (0..12).map(|i| vec![0.5 + 0.05 * i as f64, -0.1 * i as f64]).collect();
        let a = batch_log_likelihood(&l1, &thetas, 1, 1).unwrap();
        let b = batch_log_likelihood(&l4, &thetas, 1, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn repeated_theta_solved_once() {
        let l = setup(100_000);
        let thetas = vec![vec![1.0, 0.0]; 5];
        let v = batch_log_likelihood(&l, &thetas, 0, 2).unwrap();
        assert!(v.iter().all(|x| *x == v[0]));
        assert_eq!(l.solve_counts(), vec![1, 0]);
        batch_log_likelihood(&l, &thetas, 0, 2).unwrap();
        assert_eq!(l.solve_counts(), vec![1, 0]);
    }

    #[test]
    fn capacity_failure_is_isolated() {
        let l = setup(60);
        let thetas = vec![vec![0.5, 0.0], vec![3.0, -2.0], vec![0.3, 0.0]];
        let v = batch_log_likelihood(&l, &thetas, 1, 2).unwrap();
        assert!(v[0].is_finite() && v[2].is_finite());
        assert_eq!(v[1], f64::NEG_INFINITY);
    }
}
