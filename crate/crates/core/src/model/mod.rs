//! Stochastic reaction networks: species, reactions, propensities and
//! Gaussian priors over log10-transformed parameters.
//!
//! Parameters are always carried in log10 space. Conversion to linear rates
//! happens only inside propensity evaluation.

mod definition;
pub mod library;

pub use definition::{
    InitialState, ModelDefinition, ParameterDef, PropensityDef, ReactionDef, SignalDef,
    LinearTermDef, MODEL_FORMAT_VERSION,
};

use crate::error::{Error, Result};

/// A chemical species with its position in the state vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// LPS-style pulse `S(t) = max{0, exp(-r1 (t - T0)) (1 - exp(-r2 (t - T0)))}`.
///
/// Fields are parameter indices; all three parameters are log10-valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalExpr {
    pub r1: usize,
    pub r2: usize,
    pub t0: usize,
}

impl SignalExpr {
    /// Evaluates the signal at `t` for log10 parameters `theta`.
    pub fn eval(&self, t: f64, theta: &[f64]) -> f64 {
        let r1 = linear(theta[self.r1]);
        let r2 = linear(theta[self.r2]);
        let t0 = linear(theta[self.t0]);
        signal_value(t, r1, r2, t0)
    }
}

/// The pulse shape in linear units.
pub fn signal_value(t: f64, r1: f64, r2: f64, t0: f64) -> f64 {
    let dt = t - t0;
    if dt <= 0.0 {
        return 0.0;
    }
    ((-r1 * dt).exp() * (1.0 - (-r2 * dt).exp())).max(0.0)
}

/// Closed set of propensity forms. Parameter and species references are
/// resolved to indices when the network is built.
#[derive(Debug, Clone, PartialEq)]
pub enum PropensityExpr {
    /// `c * prod_i binom(x_i, nu_i)`.
    MassAction { rate: usize },
    /// `k / (1 + a * x_r^b)` times the reactant combinatorial factor.
    Hill {
        numerator: usize,
        scale: usize,
        exponent: usize,
        regulator: usize,
    },
    /// `max{0, a - b S(t)}` times the reactant combinatorial factor.
    TimeVaryingMax {
        base: usize,
        signal_coeff: usize,
        signal: SignalExpr,
    },
    /// `sum_k c_k x_{s_k}` times the reactant combinatorial factor.
    Linear { terms: Vec<(usize, usize)> },
}

impl PropensityExpr {
    pub fn is_time_varying(&self) -> bool {
        matches!(self, PropensityExpr::TimeVaryingMax { .. })
    }

    fn parameter_refs(&self) -> Vec<usize> {
        match self {
            PropensityExpr::MassAction { rate } => vec![*rate],
            PropensityExpr::Hill {
                numerator,
                scale,
                exponent,
                ..
            } => vec![*numerator, *scale, *exponent],
            PropensityExpr::TimeVaryingMax {
                base,
                signal_coeff,
                signal,
            } => vec![*base, *signal_coeff, signal.r1, signal.r2, signal.t0],
            PropensityExpr::Linear { terms } => terms.iter().map(|t| t.0).collect(),
        }
    }

    fn species_refs(&self) -> Vec<usize> {
        match self {
            PropensityExpr::Hill { regulator, .. } => vec![*regulator],
            PropensityExpr::Linear { terms } => terms.iter().map(|t| t.1).collect(),
            _ => Vec::new(),
        }
    }
}

/// One reaction channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub name: String,
    pub reactant_stoich: Vec<u32>,
    pub product_stoich: Vec<u32>,
    pub net_stoich: Vec<i64>,
    pub propensity: PropensityExpr,
}

impl Reaction {
    pub fn new(
        name: impl Into<String>,
        reactant_stoich: Vec<u32>,
        product_stoich: Vec<u32>,
        propensity: PropensityExpr,
    ) -> Result<Self> {
        let name = name.into();
        if reactant_stoich.len() != product_stoich.len() {
            return Err(Error::config(format!(
                "reaction '{name}': reactant stoichiometry has {} entries but product stoichiometry has {}",
                reactant_stoich.len(),
                product_stoich.len()
            )));
        }
        let net_stoich = product_stoich
            .iter()
            .zip(&reactant_stoich)
            .map(|(&p, &r)| p as i64 - r as i64)
            .collect();
        Ok(Reaction {
            name,
            reactant_stoich,
            product_stoich,
            net_stoich,
            propensity,
        })
    }

    /// Product of `binom(x_i, nu_i)` over reactants; zero if any reactant is short.
    pub fn combinatorial_factor(&self, x: &[i64]) -> f64 {
        let mut f = 1.0;
        for (&xi, &nu) in x.iter().zip(&self.reactant_stoich) {
            if nu == 0 {
                continue;
            }
            if xi < nu as i64 {
                return 0.0;
            }
            f *= binomial(xi, nu);
        }
        f
    }

    /// True when the current state has enough reactant molecules to fire.
    pub fn can_fire(&self, x: &[i64]) -> bool {
        x.iter()
            .zip(&self.reactant_stoich)
            .all(|(&xi, &nu)| xi >= nu as i64)
    }

    /// Time-dependent multiplier of the propensity (1 for autonomous forms).
    pub fn time_factor(&self, theta: &[f64], t: f64) -> f64 {
        match &self.propensity {
            PropensityExpr::TimeVaryingMax {
                base,
                signal_coeff,
                signal,
            } => {
                let a = linear(theta[*base]);
                let b = linear(theta[*signal_coeff]);
                (a - b * signal.eval(t, theta)).max(0.0)
            }
            _ => 1.0,
        }
    }

    /// State-dependent part of the propensity, so that
    /// `propensity = time_factor * state_factor`.
    pub fn state_factor(&self, x: &[i64], theta: &[f64]) -> f64 {
        let comb = self.combinatorial_factor(x);
        if comb == 0.0 {
            return 0.0;
        }
        match &self.propensity {
            PropensityExpr::MassAction { rate } => linear(theta[*rate]) * comb,
            PropensityExpr::Hill {
                numerator,
                scale,
                exponent,
                regulator,
            } => {
                let k = linear(theta[*numerator]);
                let a = linear(theta[*scale]);
                let b = linear(theta[*exponent]);
                let r = x[*regulator].max(0) as f64;
                comb * k / (1.0 + a * r.powf(b))
            }
            PropensityExpr::TimeVaryingMax { .. } => comb,
            PropensityExpr::Linear { terms } => {
                let s: f64 = terms
                    .iter()
                    .map(|&(p, sp)| linear(theta[p]) * x[sp].max(0) as f64)
                    .sum();
                comb * s
            }
        }
    }
}

/// `binom(n, k)` for small `k`, as a float.
pub fn binomial(n: i64, k: u32) -> f64 {
    if n < k as i64 {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 0..k as i64 {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[inline]
pub fn linear(log10_value: f64) -> f64 {
    10f64.powf(log10_value)
}

/// Evaluates the propensity of `r` at state `x`, log10 parameters `theta`
/// and time `t`.
pub fn eval_propensity(r: &Reaction, x: &[i64], theta: &[f64], t: f64) -> Result<f64> {
    let a = r.time_factor(theta, t) * r.state_factor(x, theta);
    if a.is_nan() || a < 0.0 {
        return Err(Error::model(format!(
            "reaction '{}' has invalid propensity {a} at state {x:?}",
            r.name
        )));
    }
    Ok(a)
}

/// `x + nu`; may leave the non-negative orthant.
pub fn apply_stoichiometry(x: &[i64], r: &Reaction) -> Vec<i64> {
    x.iter().zip(&r.net_stoich).map(|(a, b)| a + b).collect()
}

/// A reaction network with named species and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    pub name: String,
    pub species: Vec<Species>,
    pub parameter_names: Vec<String>,
    pub reactions: Vec<Reaction>,
    /// Sparse initial distribution over full states.
    pub initial: Vec<(Vec<i64>, f64)>,
    /// Indices of species that appear in measurements.
    pub observed: Vec<usize>,
}

impl ReactionNetwork {
    pub fn new(
        name: impl Into<String>,
        species: Vec<String>,
        parameter_names: Vec<String>,
        reactions: Vec<Reaction>,
        initial: Vec<(Vec<i64>, f64)>,
        observed: Vec<usize>,
    ) -> Result<Self> {
        let name = name.into();
        let n = species.len();
        let mut seen = std::collections::HashSet::new();
        for s in &species {
            if !seen.insert(s.as_str()) {
                return Err(Error::config(format!("duplicate species name '{s}'")));
            }
        }
        let mut seen_p = std::collections::HashSet::new();
        for p in &parameter_names {
            if !seen_p.insert(p.as_str()) {
                return Err(Error::config(format!("duplicate parameter name '{p}'")));
            }
        }
        for r in &reactions {
            if r.reactant_stoich.len() != n || r.product_stoich.len() != n {
                return Err(Error::config(format!(
                    "reaction '{}': stoichiometry must have one entry per species ({n} species)",
                    r.name
                )));
            }
            if let Some(&p) = r
                .propensity
                .parameter_refs()
                .iter()
                .find(|&&p| p >= parameter_names.len())
            {
                return Err(Error::config(format!(
                    "reaction '{}' references unknown parameter #{p}",
                    r.name
                )));
            }
            if let Some(&s) = r.propensity.species_refs().iter().find(|&&s| s >= n) {
                return Err(Error::config(format!(
                    "reaction '{}' references unknown species #{s}",
                    r.name
                )));
            }
        }
        if initial.is_empty() {
            return Err(Error::config("initial distribution is empty"));
        }
        let mut total = 0.0;
        for (x, p) in &initial {
            if x.len() != n || x.iter().any(|&v| v < 0) {
                return Err(Error::config(format!("invalid initial state {x:?}")));
            }
            if !(*p >= 0.0) {
                return Err(Error::config(format!("invalid initial probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "initial probabilities sum to {total}, expected 1"
            )));
        }
        if observed.is_empty() || observed.iter().any(|&o| o >= n) {
            return Err(Error::config("observed species list is empty or out of range"));
        }
        Ok(ReactionNetwork {
            name,
            species: species
                .into_iter()
                .enumerate()
                .map(|(index, name)| Species { name, index })
                .collect(),
            parameter_names,
            reactions,
            initial,
            observed,
        })
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn is_time_varying(&self) -> bool {
        self.reactions.iter().any(|r| r.propensity.is_time_varying())
    }

    /// Indices of species that are never measured.
    pub fn hidden_species(&self) -> Vec<usize> {
        (0..self.num_species())
            .filter(|i| !self.observed.contains(i))
            .collect()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|s| s == name)
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_parameters() {
            return Err(Error::config(format!(
                "parameter vector has {} entries, network '{}' expects {}",
                theta.len(),
                self.name,
                self.num_parameters()
            )));
        }
        Ok(())
    }
}

/// Named log10 parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl ParameterVector {
    pub fn linear(&self, i: usize) -> f64 {
        linear(self.values[i])
    }
}

/// Independent Gaussian priors in log10 space.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl PriorSpec {
    pub fn new(means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if means.len() != sds.len() {
            return Err(Error::config(format!(
                "prior has {} means but {} standard deviations",
                means.len(),
                sds.len()
            )));
        }
        if let Some(s) = sds.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::config(format!("prior standard deviation {s} must be > 0")));
        }
        Ok(PriorSpec { means, sds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Draws one parameter vector.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        self.means
            .iter()
            .zip(&self.sds)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect()
    }
}

/// Sum of independent Gaussian log-densities, normalization included.
pub fn log_prior(theta: &[f64], prior: &PriorSpec) -> Result<f64> {
    if theta.len() != prior.dim() {
        return Err(Error::config(format!(
            "parameter vector has {} entries, prior has {}",
            theta.len(),
            prior.dim()
        )));
    }
    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
    Ok(theta
        .iter()
        .zip(prior.means.iter().zip(&prior.sds))
        .map(|(x, (m, s))| {
            let z = (x - m) / s;
            -0.5 * z * z - s.ln() - LN_SQRT_2PI
        })
        .sum())
}
