//! The annealing loop over `(beta, fidelity)` levels.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::evidence::{total_log_evidence, EvidenceAccumulator};
use super::strategy::{select_next_level, BridgingStrategy, Decision};
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodModel;
use crate::model::{log_prior, PriorSpec};
use crate::stmcmc::rng::{stream, StreamPurpose};
use crate::stmcmc::{
    adapt_proposal, importance_weights, mcmc_sweep, resample, update_scale, AnnealState, Particle,
    SamplerConfig,
};

/// One line of the level log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub beta: f64,
    pub fidelity: usize,
    pub delta_beta: f64,
    pub ess: f64,
    pub cov: f64,
    pub acceptance: f64,
    pub sweep_iters: usize,
    /// Seconds spent on this level.
    pub wall_time: f64,
    pub strategy_decision: String,
    pub it_criterion_value: Option<f64>,
    pub cross_cov: Option<f64>,
    pub log_c_l: f64,
    pub log_c_l_variance: f64,
    pub correlation: f64,
    pub scale: f64,
    /// Solve counts per fidelity since the start of the run, taken after
    /// this level completed.
    pub cumulative_solves: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub particles: Vec<Particle>,
    pub levels: Vec<LevelRecord>,
    pub log_evidence: f64,
    pub log_evidence_sigma: f64,
    pub solve_counts: Vec<u64>,
    pub strategy: BridgingStrategy,
}

impl RunOutput {
    pub fn thetas(&self) -> Vec<Vec<f64>> {
        self.particles.iter().map(|p| p.theta.clone()).collect()
    }

    /// Top-fidelity solves made before the first bridge into the top model.
    pub fn top_solves_before_first_bridge(&self) -> u64 {
        let top = self.solve_counts.len() - 1;
        let mut prev = 0;
        for rec in &self.levels {
            if rec.fidelity == top {
                return prev;
            }
            prev = rec.cumulative_solves[top];
        }
        prev
    }

    /// Posterior mean of each parameter over the final population.
    pub fn posterior_mean(&self) -> Vec<f64> {
        let n = self.particles.len() as f64;
        let d = self.particles[0].theta.len();
        (0..d)
            .map(|k| self.particles.iter().map(|p| p.theta[k]).sum::<f64>() / n)
            .collect()
    }

    /// Per-parameter population standard deviation of the final population.
    pub fn posterior_std(&self) -> Vec<f64> {
        let mean = self.posterior_mean();
        let n = self.particles.len() as f64;
        mean.iter()
            .enumerate()
            .map(|(k, m)| {
                (self.particles.iter().map(|p| (p.theta[k] - m).powi(2)).sum::<f64>() / n).sqrt()
            })
            .collect()
    }
}

/// Runs multifidelity ST-MCMC to `beta = 1` on the top model of `likelihood`.
///
/// All parallel work runs on a private pool of `workers` threads. The output
/// does not depend on `workers`.
pub fn run_multifidelity(
    likelihood: &dyn LikelihoodModel,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    strategy: &BridgingStrategy,
    seed: u64,
    workers: usize,
) -> Result<RunOutput> {
    run_multifidelity_observed(likelihood, prior, cfg, strategy, seed, workers, &mut |_| {})
}

/// As [`run_multifidelity`], calling `observer` after every completed level.
pub fn run_multifidelity_observed(
    likelihood: &dyn LikelihoodModel,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    strategy: &BridgingStrategy,
    seed: u64,
    workers: usize,
    observer: &mut (dyn FnMut(&LevelRecord) + Send),
) -> Result<RunOutput> {
    cfg.validate()?;
    strategy.validate()?;
    if workers == 0 {
        return Err(Error::config("workers must be at least 1"));
    }
    if likelihood.num_levels() == 0 {
        return Err(Error::config("the model hierarchy is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| anneal(likelihood, prior, cfg, strategy, seed, observer))
}

fn initial_population(
    likelihood: &dyn LikelihoodModel,
    prior: &PriorSpec,
    n: usize,
    fidelity: usize,
    seed: u64,
) -> Result<Vec<Particle>> {
    let thetas: Vec<Vec<f64>> = (0..n as u64)
        .map(|i| prior.sample(&mut stream(seed, 0, i, StreamPurpose::Init)))
        .collect();
    let log_likes = likelihood.batch(&thetas, fidelity)?;
    thetas
        .into_iter()
        .zip(log_likes)
        .map(|(theta, log_like)| {
            Ok(Particle {
                log_prior: log_prior(&theta, prior)?,
                theta,
                log_like,
            })
        })
        .collect()
}

fn anneal(
    likelihood: &dyn LikelihoodModel,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    strategy: &BridgingStrategy,
    seed: u64,
    observer: &mut (dyn FnMut(&LevelRecord) + Send),
) -> Result<RunOutput> {
    let top = likelihood.num_levels() - 1;
    let d = prior.dim();
    let baseline = likelihood.solve_counts();
    let solves_so_far = || -> Vec<u64> {
        likelihood
            .solve_counts()
            .iter()
            .zip(&baseline)
            .map(|(now, before)| now - before)
            .collect()
    };
    let n = cfg.n_particles;
    let start_fidelity = match strategy {
        BridgingStrategy::FullFidelityOnly => top,
        _ => 0,
    };
    let mut state = AnnealState {
        beta: 0.0,
        level: 0,
        fidelity: start_fidelity,
        particles: initial_population(likelihood, prior, n, start_fidelity, seed)?,
        proposal: None,
        scale: cfg.initial_scale.unwrap_or(2.38 / (d as f64).sqrt()),
    };
    let mut evidence = EvidenceAccumulator::new();
    let mut levels = Vec::new();

    while !(state.beta >= 1.0 && state.fidelity == top) {
        if state.level >= cfg.max_levels {
            return Err(Error::Sampler(format!(
                "no convergence after {} levels (beta = {}, fidelity = {})",
                cfg.max_levels, state.beta, state.fidelity
            )));
        }
        let clock = Instant::now();
        let choice = select_next_level(strategy, &state, likelihood, cfg)?;
        let old_ll = state.log_likes();
        let new_ll = choice.new_log_likes.clone().unwrap_or_else(|| old_ll.clone());
        let stats = importance_weights(
            &old_ll,
            state.beta,
            state.fidelity,
            choice.beta,
            choice.fidelity,
            Some(&new_ll),
        )?;
        evidence.push(&stats);

        let thetas = state.thetas();
        let proposal = adapt_proposal(&thetas, &stats.normalized, state.scale)?;
        let level = state.level as u64 + 1;
        let idx = resample(
            &stats.normalized,
            n,
            &mut stream(seed, level, 0, StreamPurpose::Resample),
        );
        let resampled: Vec<Particle> = idx
            .iter()
            .map(|&i| Particle {
                theta: thetas[i].clone(),
                log_like: new_ll[i],
                log_prior: state.particles[i].log_prior,
            })
            .collect();
        let (particles, diag) = mcmc_sweep(
            resampled,
            choice.beta,
            choice.fidelity,
            prior,
            likelihood,
            &proposal,
            &cfg.sweep(),
            seed,
            level,
        )?;
        let scale = update_scale(
            state.scale,
            diag.acceptance,
            cfg.target_acceptance,
            cfg.scale_adaptation_rate,
        );
        let decision = match choice.decision {
            Decision::Temper { .. } => "temper",
            Decision::Bridge { .. } => "bridge",
        };
        let record = LevelRecord {
            level: level as usize,
            beta: choice.beta,
            fidelity: choice.fidelity,
            delta_beta: choice.beta - state.beta,
            ess: stats.ess,
            cov: stats.cov,
            acceptance: diag.acceptance,
            sweep_iters: diag.iterations,
            wall_time: clock.elapsed().as_secs_f64(),
            strategy_decision: decision.to_string(),
            it_criterion_value: choice.it_criterion,
            cross_cov: choice.cross_cov,
            log_c_l: stats.log_mean,
            log_c_l_variance: stats.log_mean_variance,
            correlation: diag.correlation,
            scale,
            cumulative_solves: solves_so_far(),
        };
        log::info!(
            "level {} beta={:.5} m={} {} ess={:.1} acc={:.3}",
            record.level,
            record.beta,
            record.fidelity,
            decision,
            record.ess,
            record.acceptance
        );
        observer(&record);
        levels.push(record);
        state = AnnealState {
            beta: choice.beta,
            level: level as usize,
            fidelity: choice.fidelity,
            particles,
            proposal: Some(proposal),
            scale,
        };
    }
    evidence.mark_complete();
    let (log_evidence, log_evidence_sigma) = total_log_evidence(&evidence)?;
    Ok(RunOutput {
        particles: state.particles,
        levels,
        log_evidence,
        log_evidence_sigma,
        solve_counts: solves_so_far(),
        strategy: strategy.clone(),
    })
}
