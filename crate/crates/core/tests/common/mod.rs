//! Shared analytic test problems.
#![allow(dead_code)]

use mfst_core::likelihood::LikelihoodModel;
use mfst_core::model::PriorSpec;
use mfst_core::Result;

/// Scalar Gaussian mean with known noise; every fidelity level shares the
/// exact likelihood except for an optional per-level offset in the mean and
/// a per-level noise inflation.
pub struct ConjugateGaussian {
    pub data: Vec<f64>,
    pub noise_sd: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
    /// `(mean shift, sd multiplier)` per level; the last entry is the exact model.
    pub levels: Vec<(f64, f64)>,
}

impl ConjugateGaussian {
    pub fn new(data: Vec<f64>, noise_sd: f64, prior_mean: f64, prior_sd: f64) -> Self {
        ConjugateGaussian {
            data,
            noise_sd,
            prior_mean,
            prior_sd,
            levels: vec![(0.0, 1.0)],
        }
    }

    pub fn prior(&self) -> PriorSpec {
        PriorSpec::new(vec![self.prior_mean], vec![self.prior_sd]).unwrap()
    }

    /// Closed-form posterior `(mean, variance)`.
    pub fn posterior(&self) -> (f64, f64) {
        let n = self.data.len() as f64;
        let prec = 1.0 / self.prior_sd.powi(2) + n / self.noise_sd.powi(2);
        let sum: f64 = self.data.iter().sum();
        let mean = (self.prior_mean / self.prior_sd.powi(2) + sum / self.noise_sd.powi(2)) / prec;
        (mean, 1.0 / prec)
    }

    /// Closed-form log marginal likelihood.
    pub fn log_evidence(&self) -> f64 {
        let n = self.data.len() as f64;
        let s2 = self.noise_sd.powi(2);
        let t2 = self.prior_sd.powi(2);
        let dev: Vec<f64> = self.data.iter().map(|y| y - self.prior_mean).collect();
        let ss: f64 = dev.iter().map(|d| d * d).sum();
        let sd: f64 = dev.iter().sum();
        // covariance s2 I + t2 11^T: determinant and inverse via rank-one update
        let logdet = n * s2.ln() + (1.0 + n * t2 / s2).ln();
        let quad = ss / s2 - t2 * sd * sd / (s2 * (s2 + n * t2));
        -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
    }
}

impl LikelihoodModel for ConjugateGaussian {
    fn num_levels(&self) -> usize {
        self.levels.len()
    }

    fn log_likelihood(&self, theta: &[f64], level: usize) -> Result<f64> {
        let (shift, mult) = self.levels[level];
        let s = self.noise_sd * mult;
        let mu = theta[0] + shift;
        Ok(self
            .data
            .iter()
            .map(|y| -0.5 * ((y - mu) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln())
            .sum())
    }
}
