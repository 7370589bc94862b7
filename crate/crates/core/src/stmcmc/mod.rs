//! Sequential tempered MCMC: annealing-step tuning, importance weights,
//! systematic resampling and adaptive Metropolis-Hastings sweeps.

mod adapt;
mod mh;
mod resample;
pub mod rng;
mod sweep;
mod weights;

pub use adapt::{adapt_proposal, update_scale, weighted_covariance};
pub use mh::{metropolis_accept, mh_step, GaussianProposal, Particle, ProposalKernel};
pub use resample::resample;
pub use sweep::{
    autocorrelation, autocorrelation_ess, mcmc_sweep, population_correlation, ChainDiagnostics,
    SweepConfig,
};
pub use weights::{
    cov_of_log_weights, importance_weights, log_mean_exp, tempered, transition_log_weights,
    tune_delta_beta, WeightStats,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::LikelihoodModel;
use crate::model::PriorSpec;
use crate::multifi::{run_multifidelity, BridgingStrategy, RunOutput};

/// Sampler tuning constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_particles: usize,
    /// Target COV for tempering steps.
    pub kappa: f64,
    pub correlation_target: f64,
    pub max_sweep_iters: usize,
    pub target_acceptance: f64,
    pub scale_adaptation_rate: f64,
    /// Initial proposal scale; defaults to `2.38 / sqrt(d)`.
    pub initial_scale: Option<f64>,
    /// Abort after this many annealing levels.
    pub max_levels: usize,
    /// Number of particles used for top-fidelity solves in the IT criterion.
    pub it_subsample: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_particles: 512,
            kappa: 1.0,
            correlation_target: 0.6,
            max_sweep_iters: 100,
            target_acceptance: 0.234,
            scale_adaptation_rate: 1.0,
            initial_scale: None,
            max_levels: 10_000,
            it_subsample: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::config("n_particles must be at least 2"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::config("kappa must be positive"));
        }
        if !(self.correlation_target > 0.0 && self.correlation_target <= 1.0) {
            return Err(Error::config("correlation_target must lie in (0, 1]"));
        }
        if self.max_sweep_iters == 0 || self.max_levels == 0 {
            return Err(Error::config("iteration limits must be positive"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::config("target_acceptance must lie in (0, 1)"));
        }
        if let Some(s) = self.initial_scale {
            if !(s > 0.0) {
                return Err(Error::config("initial_scale must be positive"));
            }
        }
        if self.it_subsample == Some(0) {
            return Err(Error::config("it_subsample must be positive"));
        }
        Ok(())
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            correlation_target: self.correlation_target,
            max_iters: self.max_sweep_iters,
        }
    }
}

/// Population state between annealing levels.
#[derive(Debug, Clone)]
pub struct AnnealState {
    pub beta: f64,
    pub level: usize,
    pub fidelity: usize,
    pub particles: Vec<Particle>,
    pub proposal: Option<GaussianProposal>,
    pub scale: f64,
}

impl AnnealState {
    pub fn thetas(&self) -> Vec<Vec<f64>> {
        self.particles.iter().map(|p| p.theta.clone()).collect()
    }

    pub fn log_likes(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_like).collect()
    }
}

/// Single-fidelity ST-MCMC on the top model of `likelihood`.
pub fn run_fixed_fidelity(
    likelihood: &dyn LikelihoodModel,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    seed: u64,
    workers: usize,
) -> Result<RunOutput> {
    run_multifidelity(likelihood, prior, cfg, &BridgingStrategy::FullFidelityOnly, seed, workers)
}
