//! Importance weights, coefficient of variation and annealing-step tuning.

use serde::Serialize;

use crate::error::{Error, Result};

/// Summary of one set of unnormalized log-weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightStats {
    pub log_weights: Vec<f64>,
    pub normalized: Vec<f64>,
    pub cov: f64,
    pub ess: f64,
    /// `log((1/N) sum w_i)`.
    pub log_mean: f64,
    /// Delta-method variance of `log_mean`.
    pub log_mean_variance: f64,
}

impl WeightStats {
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        let n = log_weights.len();
        if n == 0 {
            return Err(Error::Sampler("empty population".into()));
        }
        if log_weights.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Sampler("invalid log-weight".into()));
        }
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Sampler("every particle has zero weight".into()));
        }
        let w: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let sum: f64 = w.iter().sum();
        let mean = sum / n as f64;
        let var_pop = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let cov = var_pop.sqrt() / mean;
        let var_sample = if n > 1 { var_pop * n as f64 / (n - 1) as f64 } else { 0.0 };
        Ok(WeightStats {
            normalized: w.iter().map(|x| x / sum).collect(),
            cov,
            ess: n as f64 / (1.0 + cov * cov),
            log_mean: max + mean.ln(),
            log_mean_variance: var_sample / (n as f64 * mean * mean),
            log_weights,
        })
    }
}

/// `beta * L` with the convention `0 * (-inf) = 0`.
#[inline]
pub fn tempered(beta: f64, log_like: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        beta * log_like
    }
}

/// Log-weights `beta_new * L_new - beta_old * L_old` for a transition that may
/// change both the annealing factor and the model.
pub fn transition_log_weights(old: &[f64], beta_old: f64, new: &[f64], beta_new: f64) -> Result<Vec<f64>> {
    if old.len() != new.len() {
        return Err(Error::Contract(format!(
            "log-likelihood vectors differ in length ({} vs {})",
            old.len(),
            new.len()
        )));
    }
    Ok(old
        .iter()
        .zip(new)
        .map(|(&lo, &ln)| {
            let prev = tempered(beta_old, lo);
            if prev == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                tempered(beta_new, ln) - prev
            }
        })
        .collect())
}

/// Weights for moving from `(beta, m)` to `(beta_new, m_new)`.
///
/// `new_log_likes` must be given when the model changes; for a same-model
/// step it may be omitted.
pub fn importance_weights(
    log_likes: &[f64],
    beta: f64,
    model: usize,
    beta_new: f64,
    model_new: usize,
    new_log_likes: Option<&[f64]>,
) -> Result<WeightStats> {
    let new = match (model_new == model, new_log_likes) {
        (_, Some(l)) => l,
        (true, None) => log_likes,
        (false, None) => {
            return Err(Error::Contract(format!(
                "model change {model} -> {model_new} requires new-model log-likelihoods"
            )))
        }
    };
    if model_new == model && beta_new < beta {
        return Err(Error::Contract(format!(
            "annealing factor cannot decrease within a model ({beta} -> {beta_new})"
        )));
    }
    WeightStats::from_log_weights(transition_log_weights(log_likes, beta, new, beta_new)?)
}

/// Population coefficient of variation of `exp(x_i - max x)`; `-inf`
/// entries count as zero weights. Returns 0 for an all-`-inf` input.
pub fn cov_of_log_weights(log_w: &[f64]) -> f64 {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || log_w.is_empty() {
        return 0.0;
    }
    let n = log_w.len() as f64;
    let mut s = 0.0;
    let mut s2 = 0.0;
    for &x in log_w {
        let w = (x - max).exp();
        s += w;
        s2 += w * w;
    }
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    var.sqrt() / mean
}

fn tempered_cov(finite: &[f64], delta: f64) -> f64 {
    let lw: Vec<f64> = finite.iter().map(|l| delta * l).collect();
    cov_of_log_weights(&lw)
}

/// Largest admissible `delta_beta` whose weights `exp(delta_beta * L_i)`
/// have COV equal to `kappa`, or `1 - beta` when even that step stays below
/// the target. Particles with `L = -inf` are excluded from the COV.
pub fn tune_delta_beta(log_likes: &[f64], beta: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::config(format!("COV target must be positive, got {kappa}")));
    }
    let finite: Vec<f64> = log_likes.iter().copied().filter(|l| l.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Sampler("all log-likelihoods are -inf".into()));
    }
    let cap = 1.0 - beta;
    if cap <= 0.0 {
        return Ok(0.0);
    }
    if tempered_cov(&finite, cap) <= kappa {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = tempered_cov(&finite, mid);
        if c > kappa {
            hi = mid;
        } else {
            lo = mid;
        }
        let close = ((c / kappa) - 1.0).abs() <= 1e-7;
        if (hi - lo <= 1e-6 * hi && close) || hi - lo <= 1e-15 * cap {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `log((1/N) sum exp(x_i))`, stable for large magnitudes.
pub fn log_mean_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + (x.iter().map(|v| (v - max).exp()).sum::<f64>() / x.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_log_likes_hit_the_cap() {
        assert_eq!(tune_delta_beta(&[-3.0; 10], 0.25, 1.0).unwrap(), 0.75);
    }

    #[test]
    fn two_point_closed_form() {
        let d = tune_delta_beta(&[0.0, 100f64.ln()], 0.0, 0.9).unwrap();
        let expected = 19f64.ln() / 100f64.ln();
        assert!((d - expected).abs() < 1e-6, "{d} vs {expected}");
    }

    #[test]
    fn ess_formula() {
        let ws = WeightStats::from_log_weights(vec![0.0, -1.0, -3.0, 0.5]).unwrap();
        assert!((ws.ess - 4.0 / (1.0 + ws.cov * ws.cov)).abs() < 1e-15);
        assert!((ws.normalized.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_transition_has_unit_weights() {
        let ws = importance_weights(&[-1.0, -5.0, -2.0], 0.3, 0, 0.3, 0, None).unwrap();
        assert!(ws.log_weights.iter().all(|w| *w == 0.0));
        assert_eq!(ws.cov, 0.0);
    }

    #[test]
    fn same_model_tempering_weights() {
        let ws = importance_weights(&[0.0, -2.0], 0.0, 0, 0.5, 0, None).unwrap();
        assert_eq!(ws.log_weights, vec![0.0, -1.0]);
    }

    #[test]
    fn cross_model_requires_new_log_likes() {
        assert!(matches!(
            importance_weights(&[0.0], 0.5, 0, 0.5, 1, None),
            Err(Error::Contract(_))
        ));
        let ws = importance_weights(&[-1.0, -2.0], 0.5, 0, 0.7, 1, Some(&[-3.0, -1.0])).unwrap();
        assert!((ws.log_weights[0] - (0.7 * -3.0 + 0.5)).abs() < 1e-15);
        assert!((ws.log_weights[1] - (0.7 * -1.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn all_neg_infinity_is_an_error() {
        assert!(tune_delta_beta(&[f64::NEG_INFINITY; 3], 0.0, 1.0).is_err());
        assert!(WeightStats::from_log_weights(vec![f64::NEG_INFINITY; 3]).is_err());
    }
}
