use nalgebra::DMatrix;

use super::mh::GaussianProposal;
use crate::error::{Error, Result};

/// Weighted sample covariance of the population.
pub fn weighted_covariance(thetas: &[Vec<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = thetas[0].len();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    for (t, w) in thetas.iter().zip(weights) {
        for k in 0..d {
            mean[k] += w * t[k] / total;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for (t, w) in thetas.iter().zip(weights) {
        let wn = w / total;
        if wn == 0.0 {
            continue;
        }
        for a in 0..d {
            let da = t[a] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += wn * da * (t[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            cov[(b, a)] = cov[(a, b)];
        }
    }
    cov
}

/// Proposal with the weighted population covariance scaled by `scale^2`.
pub fn adapt_proposal(thetas: &[Vec<f64>], weights: &[f64], scale: f64) -> Result<GaussianProposal> {
    let n = thetas.len();
    let d = thetas.first().map_or(0, Vec::len);
    if n != weights.len() || d == 0 {
        return Err(Error::Contract("population and weights do not match".into()));
    }
    if n < d + 2 {
        return Err(Error::Contract(format!(
            "population of {n} is too small to estimate a {d}-dimensional covariance"
        )));
    }
    GaussianProposal::new(weighted_covariance(thetas, weights), scale)
}

/// `s * exp(rate * (acceptance - target))`.
pub fn update_scale(scale: f64, acceptance: f64, target: f64, rate: f64) -> f64 {
    scale * (rate * (acceptance - target)).exp()
}
