//! Level-selection rules: when to temper, when to bridge to the next model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::LikelihoodModel;
use crate::stmcmc::{cov_of_log_weights, tempered, tune_delta_beta, AnnealState, SamplerConfig};

/// Relative slack under which a bridging COV equal to its target counts as a tie.
const TIE_TOLERANCE: f64 = 1e-9;
const CROSS_GRID: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BridgingStrategy {
    FullFidelityOnly,
    EssBridge { kappa_bridge: f64 },
    ItBridge,
    TunedItBridge { kappa_cross: f64 },
}

impl BridgingStrategy {
    /// Parses the command-line names `full`, `ess`, `it` and `tuned-it`.
    pub fn from_name(name: &str, kappa_bridge: f64, kappa_cross: f64) -> Result<Self> {
        let s = match name {
            "full" => BridgingStrategy::FullFidelityOnly,
            "ess" => BridgingStrategy::EssBridge { kappa_bridge },
            "it" => BridgingStrategy::ItBridge,
            "tuned-it" => BridgingStrategy::TunedItBridge { kappa_cross },
            other => {
                return Err(Error::config(format!(
                    "unknown strategy '{other}' (expected full, ess, it or tuned-it)"
                )))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BridgingStrategy::FullFidelityOnly => "full",
            BridgingStrategy::EssBridge { .. } => "ess",
            BridgingStrategy::ItBridge => "it",
            BridgingStrategy::TunedItBridge { .. } => "tuned-it",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BridgingStrategy::EssBridge { kappa_bridge: k } | BridgingStrategy::TunedItBridge { kappa_cross: k }
                if !(*k > 0.0) =>
            {
                Err(Error::config(format!("strategy COV target must be positive, got {k}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Temper { delta_beta: f64 },
    Bridge { beta: f64 },
}

/// Outcome of [`select_next_level`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelChoice {
    pub beta: f64,
    pub fidelity: usize,
    pub decision: Decision,
    pub it_criterion: Option<f64>,
    pub cross_cov: Option<f64>,
    /// Log-likelihoods of the population under the new fidelity, when it changed.
    pub new_log_likes: Option<Vec<f64>>,
}

/// ESS bridging rule for one level.
///
/// Bridges when the COV of `exp(beta (L_next - L_m))` exceeds `kappa_bridge`;
/// otherwise tempers under model `m` with the usual COV target `kappa`.
pub fn ess_bridge_decide(
    l_m: &[f64],
    l_next: &[f64],
    beta: f64,
    kappa_bridge: f64,
    kappa: f64,
) -> Result<(Decision, f64)> {
    if beta == 0.0 {
        return Ok((
            Decision::Temper {
                delta_beta: tune_delta_beta(l_m, beta, kappa)?,
            },
            0.0,
        ));
    }
    let lw: Vec<f64> = l_m
        .iter()
        .zip(l_next)
        .map(|(&a, &b)| if a.is_finite() { tempered(beta, b) - beta * a } else { f64::NEG_INFINITY })
        .collect();
    let cov = cov_of_log_weights(&lw);
    if cov > kappa_bridge * (1.0 + TIE_TOLERANCE) {
        Ok((Decision::Bridge { beta }, cov))
    } else {
        Ok((
            Decision::Temper {
                delta_beta: tune_delta_beta(l_m, beta, kappa)?,
            },
            cov,
        ))
    }
}

/// Signed information-gain estimate for tempering by `delta_beta` under the
/// surrogate `m`, using top-fidelity log-likelihoods `l_top` at the same
/// particles. Non-negative values favour keeping the surrogate.
pub fn it_criterion(l_m: &[f64], l_top: &[f64], beta: f64, delta_beta: f64) -> Result<f64> {
    if l_m.len() != l_top.len() {
        return Err(Error::Contract("IT criterion needs paired log-likelihoods".into()));
    }
    let pairs: Vec<(f64, f64)> = l_m
        .iter()
        .zip(l_top)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(&a, &b)| (a, b))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Sampler("IT criterion: no particle has finite log-likelihoods".into()));
    }
    if pairs.len() < l_m.len() {
        log::warn!(
            "IT criterion: excluded {} particles with infinite log-likelihood",
            l_m.len() - pairs.len()
        );
    }
    let a: Vec<f64> = pairs.iter().map(|p| delta_beta * p.0).collect();
    let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let centered: Vec<f64> = a.iter().map(|v| v - amax).collect();
    let lme = (centered.iter().map(|c| c.exp()).sum::<f64>() / centered.len() as f64).ln();
    let lr: Vec<f64> = pairs.iter().map(|(lm, lk)| lk - tempered(beta, *lm)).collect();
    let rmax = lr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(lr
        .iter()
        .zip(&centered)
        .map(|(l, c)| (l - rmax).exp() * (c - lme))
        .sum())
}

fn cross_cov(l_m: &[f64], l_next: &[f64], beta: f64, beta_new: f64) -> f64 {
    let lw: Vec<f64> = l_m
        .iter()
        .zip(l_next)
        .filter(|(a, _)| a.is_finite() || beta == 0.0)
        .map(|(&a, &b)| tempered(beta_new, b) - tempered(beta, a))
        .collect();
    cov_of_log_weights(&lw)
}

/// Annealing factor for the first level on the next model: the largest
/// `beta'` in `[0, 1]` at which the COV of `exp(beta' L_next - beta L_m)`
/// equals `kappa_cross`, or the COV minimizer on a 1e-3 grid if no root exists.
pub fn tune_beta_cross_fidelity(l_m: &[f64], l_next: &[f64], beta: f64, kappa_cross: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Contract(format!("beta {beta} outside [0, 1]")));
    }
    if !(kappa_cross > 0.0) {
        return Err(Error::config("kappa_cross must be positive"));
    }
    if !l_next.iter().any(|l| l.is_finite()) {
        return Err(Error::Sampler("all next-fidelity log-likelihoods are -inf".into()));
    }
    let f = |b: f64| cross_cov(l_m, l_next, beta, b);
    if f(1.0) <= kappa_cross {
        return Ok(1.0);
    }
    let grid: Vec<f64> = (0..=CROSS_GRID).map(|j| j as f64 / CROSS_GRID as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&b| f(b)).collect();
    if let Some(j) = (0..CROSS_GRID).rev().find(|&j| vals[j] <= kappa_cross) {
        let (mut lo, mut hi) = (grid[j], grid[j + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= kappa_cross {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(0.5 * (lo + hi));
    }
    let mut best = 0;
    for j in 1..=CROSS_GRID {
        if vals[j] <= vals[best] {
            best = j;
        }
    }
    Ok(grid[best])
}

fn subsample(thetas: &[Vec<f64>], cfg: &SamplerConfig) -> usize {
    cfg.it_subsample.map_or(thetas.len(), |n| n.min(thetas.len()))
}

/// Chooses `(beta, m)` for the next level.
pub fn select_next_level(
    strategy: &BridgingStrategy,
    state: &AnnealState,
    likelihood: &dyn LikelihoodModel,
    cfg: &SamplerConfig,
) -> Result<LevelChoice> {
    let top = likelihood.num_levels() - 1;
    let m = state.fidelity;
    let beta = state.beta;
    let l_m = state.log_likes();
    let thetas = state.thetas();
    let temper = |delta_beta: f64, it: Option<f64>, cov: Option<f64>| LevelChoice {
        beta: (beta + delta_beta).min(1.0),
        fidelity: m,
        decision: Decision::Temper { delta_beta },
        it_criterion: it,
        cross_cov: cov,
        new_log_likes: None,
    };
    let bridge = |beta_new: f64, l_next: Vec<f64>, it: Option<f64>, cov: Option<f64>| LevelChoice {
        beta: beta_new,
        fidelity: m + 1,
        decision: Decision::Bridge { beta: beta_new },
        it_criterion: it,
        cross_cov: cov,
        new_log_likes: Some(l_next),
    };

    if m >= top || matches!(strategy, BridgingStrategy::FullFidelityOnly) {
        return Ok(temper(tune_delta_beta(&l_m, beta, cfg.kappa)?, None, None));
    }
    let tuned_beta = |l_next: &[f64]| -> Result<(f64, f64)> {
        match strategy {
            BridgingStrategy::TunedItBridge { kappa_cross } => {
                let b = tune_beta_cross_fidelity(&l_m, l_next, beta, *kappa_cross)?;
                Ok((b, cross_cov(&l_m, l_next, beta, b)))
            }
            _ => Ok((beta, cross_cov(&l_m, l_next, beta, beta))),
        }
    };
    if beta >= 1.0 {
        let l_next = likelihood.batch(&thetas, m + 1)?;
        let (b, c) = tuned_beta(&l_next)?;
        return Ok(bridge(b, l_next, None, Some(c)));
    }
    match strategy {
        BridgingStrategy::FullFidelityOnly => unreachable!(),
        BridgingStrategy::EssBridge { kappa_bridge } => {
            if beta == 0.0 {
                return Ok(temper(tune_delta_beta(&l_m, beta, cfg.kappa)?, None, None));
            }
            let l_next = likelihood.batch(&thetas, m + 1)?;
            let (decision, cov) = ess_bridge_decide(&l_m, &l_next, beta, *kappa_bridge, cfg.kappa)?;
            Ok(match decision {
                Decision::Temper { delta_beta } => temper(delta_beta, None, Some(cov)),
                Decision::Bridge { .. } => bridge(beta, l_next, None, Some(cov)),
            })
        }
        BridgingStrategy::ItBridge | BridgingStrategy::TunedItBridge { .. } => {
            let delta_beta = tune_delta_beta(&l_m, beta, cfg.kappa)?;
            let n_it = subsample(&thetas, cfg);
            let l_top = likelihood.batch(&thetas[..n_it], top)?;
            let value = it_criterion(&l_m[..n_it], &l_top, beta, delta_beta)?;
            if value >= 0.0 {
                return Ok(temper(delta_beta, Some(value), None));
            }
            let l_next = likelihood.batch(&thetas, m + 1)?;
            let (b, c) = tuned_beta(&l_next)?;
            Ok(bridge(b, l_next, Some(value), Some(c)))
        }
    }
}
