use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mh::{mh_step, Particle, ProposalKernel};
use super::rng::{stream, StreamPurpose};
use crate::error::Result;
use crate::likelihood::LikelihoodModel;
use crate::model::PriorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub correlation_target: f64,
    pub max_iters: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            correlation_target: 0.6,
            max_iters: 100,
        }
    }
}

/// Per-sweep chain statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub acceptance: f64,
    pub iterations: usize,
    /// Final value of the termination statistic.
    pub correlation: f64,
    /// Lag-1 autocorrelation per parameter, pooled over chains.
    pub lag1_autocorrelation: Vec<f64>,
}

/// Pearson correlation of two samples; 0 when either is constant unless
/// they coincide, in which case 1.
fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return if x == y { 1.0 } else { 0.0 };
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Maximum over parameters of `|corr(theta_start, theta_now)|` across the population.
pub fn population_correlation(start: &[Vec<f64>], current: &[Vec<f64>]) -> f64 {
    let d = start[0].len();
    (0..d)
        .map(|k| {
            let a: Vec<f64> = start.iter().map(|t| t[k]).collect();
            let b: Vec<f64> = current.iter().map(|t| t[k]).collect();
            pearson(&a, &b).abs()
        })
        .fold(0.0, f64::max)
}

/// Lag-`k` autocorrelation of one series.
pub fn autocorrelation(series: &[f64], k: usize) -> f64 {
    let n = series.len();
    if k >= n {
        return 0.0;
    }
    let m = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - m).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = (0..n - k).map(|i| (series[i] - m) * (series[i + k] - m)).sum();
    cov / var
}

/// `n / (1 + 2 sum_k rho_k)`, truncating the sum at the first non-positive lag.
pub fn autocorrelation_ess(series: &[f64]) -> f64 {
    let n = series.len();
    let mut s = 0.0;
    for k in 1..n {
        let r = autocorrelation(series, k);
        if r <= 0.0 {
            break;
        }
        s += r;
    }
    n as f64 / (1.0 + 2.0 * s)
}

/// Runs all chains in lock-step until the population has decorrelated from
/// its starting point or `max_iters` steps have been taken.
#[allow(clippy::too_many_arguments)]
pub fn mcmc_sweep(
    particles: Vec<Particle>,
    beta: f64,
    fidelity: usize,
    prior: &PriorSpec,
    likelihood: &dyn LikelihoodModel,
    proposal: &dyn ProposalKernel,
    cfg: &SweepConfig,
    seed: u64,
    level: u64,
) -> Result<(Vec<Particle>, ChainDiagnostics)> {
    let n = particles.len();
    let d = particles[0].theta.len();
    let start: Vec<Vec<f64>> = particles.iter().map(|p| p.theta.clone()).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..n as u64)
        .map(|c| stream(seed, level, c, StreamPurpose::Mh))
        .collect();
    let mut current = particles;
    let mut trajectory: Vec<Vec<Vec<f64>>> = vec![start.clone()];
    let mut accepted = 0usize;
    let mut iterations = 0;
    let mut correlation = 1.0;
    while iterations < cfg.max_iters.max(1) {
        let moved: Vec<(Particle, bool)> = current
            .par_iter()
            .zip(rngs.par_iter_mut())
            .map(|(p, rng)| mh_step(p, beta, fidelity, prior, likelihood, proposal, rng))
            .collect::<Result<_>>()?;
        accepted += moved.iter().filter(|m| m.1).count();
        current = moved.into_iter().map(|m| m.0).collect();
        iterations += 1;
        let now: Vec<Vec<f64>> = current.iter().map(|p| p.theta.clone()).collect();
        correlation = population_correlation(&start, &now);
        trajectory.push(now);
        if correlation <= cfg.correlation_target {
            break;
        }
    }
    let lag1 = (0..d)
        .map(|k| {
            let (mut num, mut den) = (0.0, 0.0);
            for c in 0..n {
                let series: Vec<f64> = trajectory.iter().map(|t| t[c][k]).collect();
                let m = series.iter().sum::<f64>() / series.len() as f64;
                den += series.iter().map(|x| (x - m).powi(2)).sum::<f64>();
                num += series.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>();
            }
            if den == 0.0 {
                0.0
            } else {
                (num / den).clamp(-1.0, 1.0)
            }
        })
        .collect();
    Ok((
        current,
        ChainDiagnostics {
            acceptance: accepted as f64 / (n * iterations) as f64,
            iterations,
            correlation,
            lag1_autocorrelation: lag1,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_prior;
    use crate::stmcmc::mh::GaussianProposal;
    use rand::Rng;

    struct Flat;
    impl LikelihoodModel for Flat {
        fn num_levels(&self) -> usize {
            1
        }
        fn log_likelihood(&self, _t: &[f64], _l: usize) -> Result<f64> {
            Ok(0.0)
        }
    }

    /// Draws directly from the prior regardless of the current point.
    struct Independent(PriorSpec);
    impl ProposalKernel for Independent {
        fn propose(&self, _theta: &[f64], rng: &mut dyn rand::RngCore) -> Vec<f64> {
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(rng.random());
            self.0.sample(&mut r)
        }
        fn log_proposal_ratio(&self, from: &[f64], to: &[f64]) -> f64 {
            log_prior(from, &self.0).unwrap() - log_prior(to, &self.0).unwrap()
        }
    }
    use rand::SeedableRng;

    fn population(prior: &PriorSpec, n: usize, seed: u64) -> Vec<Particle> {
        let mut rng = stream(seed, 0, 0, StreamPurpose::Init);
        (0..n)
            .map(|_| {
                let theta = prior.sample(&mut rng);
                let lp = log_prior(&theta, prior).unwrap();
                Particle {
                    theta,
                    log_like: 0.0,
                    log_prior: lp,
                }
            })
            .collect()
    }

    #[test]
    fn unit_target_stops_after_one_step() {
        let prior = PriorSpec::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let prop = GaussianProposal::isotropic(2, 1e-6, 1.0).unwrap();
        let cfg = SweepConfig {
            correlation_target: 1.0,
            max_iters: 100,
        };
        let (_, diag) = mcmc_sweep(population(&prior, 64, 1), 1.0, 0, &prior, &Flat, &prop, &cfg, 9, 1).unwrap();
        assert_eq!(diag.iterations, 1);
    }

    #[test]
    fn independence_proposal_decorrelates_in_one_step() {
        let prior = PriorSpec::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let (_, diag) = mcmc_sweep(
            population(&prior, 512, 2),
            1.0,
            0,
            &prior,
            &Flat,
            &Independent(prior.clone()),
            &SweepConfig::default(),
            3,
            1,
        )
        .unwrap();
        assert_eq!(diag.iterations, 1);
        assert!(diag.acceptance > 0.99);
    }

    #[test]
    fn autocorrelation_of_alternating_series() {
        let s: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((autocorrelation(&s, 1) + 0.99).abs() < 1e-9);
        assert!(autocorrelation_ess(&s) >= 100.0);
    }
}
