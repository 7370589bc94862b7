//! Metropolis-Hastings moves in log10 parameter space.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::likelihood::LikelihoodModel;
use crate::model::{log_prior, PriorSpec};

/// One population member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Particle {
    pub theta: Vec<f64>,
    pub log_like: f64,
    pub log_prior: f64,
}

/// Candidate generator for the MH kernel.
pub trait ProposalKernel: Sync {
    fn propose(&self, theta: &[f64], rng: &mut dyn rand::RngCore) -> Vec<f64>;

    /// `log q(from | to) - log q(to | from)`; zero for symmetric kernels.
    fn log_proposal_ratio(&self, _from: &[f64], _to: &[f64]) -> f64 {
        0.0
    }
}

/// Gaussian random walk with covariance `scale^2 * covariance`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProposal {
    pub covariance: DMatrix<f64>,
    pub scale: f64,
    chol: DMatrix<f64>,
}

impl GaussianProposal {
    /// Builds the proposal, adding diagonal jitter `1e-10 * trace / d`
    /// (growing tenfold per retry) when the covariance is not positive definite.
    pub fn new(covariance: DMatrix<f64>, scale: f64) -> Result<Self> {
        let d = covariance.nrows();
        if d == 0 || d != covariance.ncols() {
            return Err(Error::Contract("proposal covariance must be square and non-empty".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Contract(format!("proposal scale must be positive, got {scale}")));
        }
        let mut cov = covariance;
        let trace = cov.trace();
        let mut jitter = if trace > 0.0 { 1e-10 * trace / d as f64 } else { 1e-10 };
        for _ in 0..30 {
            let scaled = &cov * (scale * scale);
            if let Some(ch) = scaled.cholesky() {
                return Ok(GaussianProposal {
                    covariance: cov,
                    scale,
                    chol: ch.l(),
                });
            }
            for i in 0..d {
                cov[(i, i)] += jitter;
            }
            jitter *= 10.0;
        }
        Err(Error::Sampler("proposal covariance could not be regularized".into()))
    }

    pub fn isotropic(d: usize, variance: f64, scale: f64) -> Result<Self> {
        Self::new(DMatrix::identity(d, d) * variance, scale)
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.covariance.clone(), scale)
    }
}

impl ProposalKernel for GaussianProposal {
    fn propose(&self, theta: &[f64], rng: &mut dyn rand::RngCore) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let step = &self.chol * z;
        theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect()
    }
}

/// Accepts with probability `min(1, exp(log_ratio))`. A uniform variate is
/// drawn only when the ratio is below one.
pub fn metropolis_accept(log_ratio: f64, rng: &mut dyn rand::RngCore) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// One MH transition targeting `prior(theta) * L_level(theta)^beta`.
pub fn mh_step(
    particle: &Particle,
    beta: f64,
    level: usize,
    prior: &PriorSpec,
    likelihood: &dyn LikelihoodModel,
    proposal: &dyn ProposalKernel,
    rng: &mut dyn rand::RngCore,
) -> Result<(Particle, bool)> {
    let cand = proposal.propose(&particle.theta, rng);
    let lp = log_prior(&cand, prior)?;
    let ll = likelihood.log_likelihood(&cand, level)?;
    if ll == f64::NEG_INFINITY || ll.is_nan() {
        return Ok((particle.clone(), false));
    }
    let dl = if beta == 0.0 {
        0.0
    } else {
        beta * (ll - particle.log_like)
    };
    let log_ratio = dl + lp - particle.log_prior + proposal.log_proposal_ratio(&particle.theta, &cand);
    if metropolis_accept(log_ratio, rng) {
        Ok((
            Particle {
                theta: cand,
                log_like: ll,
                log_prior: lp,
            },
            true,
        ))
    } else {
        Ok((particle.clone(), false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stmcmc::rng::{stream, StreamPurpose};

    struct SignLikelihood {
        pos: f64,
        neg: f64,
    }

    impl LikelihoodModel for SignLikelihood {
        fn num_levels(&self) -> usize {
            1
        }
        fn log_likelihood(&self, theta: &[f64], _level: usize) -> Result<f64> {
            Ok(if theta[0] > 0.0 { self.pos } else { self.neg })
        }
    }

    #[test]
    fn uphill_move_always_accepted() {
        let prior = PriorSpec::new(vec![0.0], vec![1e6]).unwrap();
        let like = SignLikelihood { pos: 0.0, neg: -1.0 };
        let prop = GaussianProposal::isotropic(1, 1.0, 1.0).unwrap();
        let p = Particle {
            theta: vec![-1e-9],
            log_like: -1.0,
            log_prior: log_prior(&[-1e-9], &prior).unwrap(),
        };
        let mut rng = stream(4, 0, 0, StreamPurpose::Mh);
        let mut ups = 0;
        for _ in 0..2000 {
            let cand_positive = {
                let mut probe = rng.clone();
                prop.propose(&p.theta, &mut probe)[0] > 0.0
            };
            let (_, acc) = mh_step(&p, 1.0, 0, &prior, &like, &prop, &mut rng).unwrap();
            if cand_positive {
                ups += 1;
                assert!(acc);
            }
        }
        assert!(ups > 800);
    }

    #[test]
    fn infinite_candidate_rejected() {
        let prior = PriorSpec::new(vec![0.0], vec![1.0]).unwrap();
        let like = SignLikelihood {
            pos: f64::NEG_INFINITY,
            neg: f64::NEG_INFINITY,
        };
        let prop = GaussianProposal::isotropic(1, 1.0, 1.0).unwrap();
        let p = Particle {
            theta: vec![0.0],
            log_like: -3.0,
            log_prior: log_prior(&[0.0], &prior).unwrap(),
        };
        let mut rng = stream(5, 0, 0, StreamPurpose::Mh);
        for _ in 0..100 {
            let (q, acc) = mh_step(&p, 0.5, 0, &prior, &like, &prop, &mut rng).unwrap();
            assert!(!acc);
            assert_eq!(q, p);
        }
    }

    #[test]
    fn empirical_acceptance_matches_formula() {
        let prior = PriorSpec::new(vec![0.0], vec![1e7]).unwrap();
        let like = SignLikelihood { pos: -0.3, neg: -1.9 };
        let prop = GaussianProposal::isotropic(1, 1.0, 1.0).unwrap();
        let p = Particle {
            theta: vec![0.0],
            log_like: -0.7,
            log_prior: log_prior(&[0.0], &prior).unwrap(),
        };
        let beta = 0.8;
        let expected = 0.5 * (beta * (-0.3f64 + 0.7)).exp().min(1.0)
            + 0.5 * (beta * (-1.9f64 + 0.7)).exp().min(1.0);
        let trials = 100_000;
        let mut rng = stream(6, 0, 0, StreamPurpose::Mh);
        let mut acc = 0;
        for _ in 0..trials {
            if mh_step(&p, beta, 0, &prior, &like, &prop, &mut rng).unwrap().1 {
                acc += 1;
            }
        }
        let rate = acc as f64 / trials as f64;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((rate - expected).abs() < 3.0 * sigma, "{rate} vs {expected}");
    }

    #[test]
    fn detailed_balance_on_three_points() {
        let target = [0.2f64, 0.5, 0.3];
        let mut rng = stream(8, 0, 0, StreamPurpose::Mh);
        let mut state = 0usize;
        let steps = 1_000_000;
        let mut visits = [0usize; 3];
        for _ in 0..steps {
            let cand = (rng.random::<u32>() % 3) as usize;
            if metropolis_accept(target[cand].ln() - target[state].ln(), &mut rng) {
                state = cand;
            }
            visits[state] += 1;
        }
        for i in 0..3 {
            let f = visits[i] as f64 / steps as f64;
            // generous for autocorrelated draws
            let sigma = (target[i] * (1.0 - target[i]) / steps as f64).sqrt() * 2.0;
            assert!((f - target[i]).abs() < 3.0 * sigma, "state {i}: {f}");
        }
    }

    #[test]
    fn singular_covariance_is_regularized() {
        let p = GaussianProposal::new(DMatrix::zeros(3, 3), 1.0).unwrap();
        assert!(p.covariance[(0, 0)] > 0.0 && p.covariance[(0, 0)] < 1e-8);
    }
}
