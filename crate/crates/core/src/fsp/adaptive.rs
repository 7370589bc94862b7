//! Adaptive FSP with a linear-in-time error budget.
//!
//! The solve advances one integrator step at a time. After each step the
//! mass that has left the enumerated set toward states still inside the box
//! is compared with `(t / t_f) * epsilon`. On violation the step is undone,
//! the constraint thresholds are relaxed, and the step is retried on the
//! larger set. Mass that leaves the box altogether belongs to the surrogate
//! model itself and is tracked separately.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsp::generator::{assemble_generator, assemble_time_varying};
use crate::fsp::space::{
    constrained_space, default_constraints, expand_state_set, FidelityBound, TruncatedStateSpace,
};
use crate::integrate::{CmeOperator, IntegratorConfig, KrylovStepper, RosenbrockStepper};
use crate::model::ReactionNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveFspConfig {
    /// Total truncation error allowed at the final time.
    pub tolerance: f64,
    pub growth_factor: f64,
    pub max_states: usize,
    pub max_expansions: usize,
    pub integrator: IntegratorConfig,
}

impl Default for AdaptiveFspConfig {
    fn default() -> Self {
        AdaptiveFspConfig {
            tolerance: 1e-8,
            growth_factor: 1.5,
            max_states: 2_000_000,
            max_expansions: 200,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl AdaptiveFspConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::config("FSP tolerance must be positive"));
        }
        if !(self.growth_factor > 1.0) {
            return Err(Error::config("FSP growth factor must exceed 1"));
        }
        if self.max_states == 0 {
            return Err(Error::config("max_states must be positive"));
        }
        self.integrator.validate()
    }
}

/// Lost mass recorded at an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub time: f64,
    pub truncation_error: f64,
    pub budget: f64,
}

/// Result of an adaptive solve. Every distribution is aligned with `space`.
#[derive(Debug, Clone)]
pub struct FspSolution {
    pub space: TruncatedStateSpace,
    pub times: Vec<f64>,
    pub distributions: Vec<Vec<f64>>,
    /// Mass absorbed by the frozen exterior of the box at each output time.
    pub frozen_mass: Vec<f64>,
    /// Mass lost to the projection at each output time.
    pub truncation_error: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub expansions: usize,
}

impl FspSolution {
    pub fn probability(&self, time_index: usize, x: &[i64]) -> f64 {
        self.space
            .index_of(x)
            .map_or(0.0, |i| self.distributions[time_index][i])
    }
}

enum Stepper<'a> {
    Krylov(KrylovStepper<'a, dyn CmeOperator + 'a>),
    Rosenbrock(RosenbrockStepper<'a, dyn CmeOperator + 'a>),
}

impl Stepper<'_> {
    fn advance(&mut self, t: f64, p: &mut [f64], target: f64) -> Result<f64> {
        match self {
            Stepper::Krylov(k) => {
                let remaining = target - t;
                let taken = k.advance(p, remaining).map_err(|e| match e {
                    Error::Integrator { message, .. } => Error::Integrator { time: t, message },
                    other => other,
                })?;
                Ok(if taken >= remaining { target } else { t + taken })
            }
            Stepper::Rosenbrock(r) => r.advance(t, p, target),
        }
    }
}

/// Solves the surrogate CME bounded by `bound` at each of `times`.
pub fn solve_cme_adaptive(
    net: &ReactionNetwork,
    theta: &[f64],
    times: &[f64],
    bound: &FidelityBound,
    init: &[(Vec<i64>, f64)],
    cfg: &AdaptiveFspConfig,
) -> Result<FspSolution> {
    cfg.validate()?;
    net.check_theta(theta)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::Contract(format!(
            "output times must be finite, nonnegative and strictly increasing: {times:?}"
        )));
    }
    let seeds: Vec<Vec<i64>> = init.iter().map(|(x, _)| x.clone()).collect();
    let with_theta = |e: Error| match e {
        Error::Capacity { states, limit, .. } => Error::Capacity {
            states,
            limit,
            theta: theta.to_vec(),
        },
        other => other,
    };
    let mut space = constrained_space(
        net,
        bound,
        &seeds,
        default_constraints(net, &seeds),
        cfg.max_states,
    )
    .map_err(with_theta)?;

    let mut p = vec![0.0; space.len() + 2];
    for (x, w) in init {
        let i = space.index_of(x).expect("seed states are enumerated");
        p[i] += w;
    }

    let t_final = times.last().copied().unwrap_or(0.0);
    let autonomous = !net.is_time_varying();
    let mut out = FspSolution {
        space: space.clone(),
        times: times.to_vec(),
        distributions: Vec::with_capacity(times.len()),
        frozen_mass: Vec::with_capacity(times.len()),
        truncation_error: Vec::with_capacity(times.len()),
        checkpoints: Vec::new(),
        expansions: 0,
    };
    let mut t = 0.0;
    let mut k = 0;
    let mut steps = 0usize;

    'epoch: loop {
        let n = space.len();
        let op: Box<dyn CmeOperator> = if autonomous {
            Box::new(assemble_generator(net, theta, &space, 0.0)?)
        } else {
            Box::new(assemble_time_varying(net, theta, &space)?)
        };
        let mut stepper = if autonomous {
            Stepper::Krylov(KrylovStepper::new(op.as_ref(), &cfg.integrator))
        } else {
            Stepper::Rosenbrock(RosenbrockStepper::new(op.as_ref(), &cfg.integrator))
        };
        while k < times.len() {
            let target = times[k];
            if t >= target {
                out.distributions.push(p[..n].to_vec());
                out.frozen_mass.push(p[n]);
                out.truncation_error.push(p[n + 1]);
                k += 1;
                continue;
            }
            let saved = p.clone();
            let t_new = stepper.advance(t, &mut p, target)?;
            steps += 1;
            if steps > cfg.integrator.max_substeps {
                return Err(Error::Integrator {
                    time: t,
                    message: format!("adaptive FSP exceeded {} steps", cfg.integrator.max_substeps),
                });
            }
            let lost = p[n + 1];
            let budget = cfg.tolerance * t_new / t_final;
            if lost > budget {
                p = saved;
                if out.expansions >= cfg.max_expansions {
                    return Err(Error::Capacity {
                        states: n,
                        limit: cfg.max_states,
                        theta: theta.to_vec(),
                    });
                }
                space = expand_state_set(&space, cfg.growth_factor, net, cfg.max_states)
                    .map_err(with_theta)?;
                out.expansions += 1;
                let mut grown = vec![0.0; space.len() + 2];
                grown[..n].copy_from_slice(&p[..n]);
                grown[space.len()] = p[n];
                grown[space.len() + 1] = p[n + 1];
                p = grown;
                continue 'epoch;
            }
            out.checkpoints.push(Checkpoint {
                time: t_new,
                truncation_error: lost,
                budget,
            });
            t = t_new;
        }
        break;
    }

    let n = space.len();
    for d in &mut out.distributions {
        d.resize(n, 0.0);
    }
    out.space = space;
    Ok(out)
}
