//! JSON model files.

use serde::{Deserialize, Serialize};

use super::{PriorSpec, PropensityExpr, Reaction, ReactionNetwork, SignalExpr};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDef {
    pub name: String,
    /// Prior mean in log10 space.
    pub prior_mean: f64,
    /// Prior standard deviation in log10 space.
    pub prior_sd: f64,
    /// Optional reference value (log10), used for simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDef {
    pub r1: String,
    pub r2: String,
    pub t0: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTermDef {
    pub param: String,
    pub species: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropensityDef {
    MassAction {
        rate: String,
    },
    Hill {
        numerator: String,
        scale: String,
        exponent: String,
        regulator: String,
    },
    TimeVaryingMax {
        base: String,
        signal_coeff: String,
        signal: SignalDef,
    },
    Linear {
        terms: Vec<LinearTermDef>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionDef {
    pub name: String,
    pub reactants: Vec<u32>,
    pub products: Vec<u32>,
    pub propensity: PropensityDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub state: Vec<i64>,
    pub probability: f64,
}

/// Serializable description of a model: network, priors, initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDefinition {
    pub format_version: u32,
    pub name: String,
    pub species: Vec<String>,
    pub parameters: Vec<ParameterDef>,
    pub reactions: Vec<ReactionDef>,
    pub initial: Vec<InitialState>,
    /// Measured species; all species when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<Vec<String>>,
}

impl ModelDefinition {
    pub fn from_json(text: &str) -> Result<Self> {
        let def: ModelDefinition = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("model file, line {}: {e}", e.line())))?;
        if def.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::config(format!(
                "model format_version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                def.format_version
            )));
        }
        Ok(def)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model definition serializes")
    }

    pub fn network(&self) -> Result<ReactionNetwork> {
        let param = |name: &str, reaction: &str| -> Result<usize> {
            self.parameters
                .iter()
                .position(|p| p.name == name)
                .ok_or_else(|| {
                    Error::config(format!(
                        "reaction '{reaction}' references unknown parameter '{name}'"
                    ))
                })
        };
        let species = |name: &str, reaction: &str| -> Result<usize> {
            self.species.iter().position(|s| s == name).ok_or_else(|| {
                Error::config(format!(
                    "reaction '{reaction}' references unknown species '{name}'"
                ))
            })
        };
        let n = self.species.len();
        let mut reactions = Vec::with_capacity(self.reactions.len());
        for r in &self.reactions {
            if r.reactants.len() != n || r.products.len() != n {
                return Err(Error::config(format!(
                    "reaction '{}': stoichiometry arrays have lengths {} and {}, but the model has {n} species",
                    r.name,
                    r.reactants.len(),
                    r.products.len()
                )));
            }
            let propensity = match &r.propensity {
                PropensityDef::MassAction { rate } => PropensityExpr::MassAction {
                    rate: param(rate, &r.name)?,
                },
                PropensityDef::Hill {
                    numerator,
                    scale,
                    exponent,
                    regulator,
                } => PropensityExpr::Hill {
                    numerator: param(numerator, &r.name)?,
                    scale: param(scale, &r.name)?,
                    exponent: param(exponent, &r.name)?,
                    regulator: species(regulator, &r.name)?,
                },
                PropensityDef::TimeVaryingMax {
                    base,
                    signal_coeff,
                    signal,
                } => PropensityExpr::TimeVaryingMax {
                    base: param(base, &r.name)?,
                    signal_coeff: param(signal_coeff, &r.name)?,
                    signal: SignalExpr {
                        r1: param(&signal.r1, &r.name)?,
                        r2: param(&signal.r2, &r.name)?,
                        t0: param(&signal.t0, &r.name)?,
                    },
                },
                PropensityDef::Linear { terms } => PropensityExpr::Linear {
                    terms: terms
                        .iter()
                        .map(|t| Ok((param(&t.param, &r.name)?, species(&t.species, &r.name)?)))
                        .collect::<Result<Vec<_>>>()?,
                },
            };
            reactions.push(Reaction::new(
                r.name.clone(),
                r.reactants.clone(),
                r.products.clone(),
                propensity,
            )?);
        }
        let observed = match &self.observed {
            None => (0..n).collect(),
            Some(names) => names
                .iter()
                .map(|s| {
                    self.species
                        .iter()
                        .position(|x| x == s)
                        .ok_or_else(|| Error::config(format!("unknown observed species '{s}'")))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        ReactionNetwork::new(
            self.name.clone(),
            self.species.clone(),
            self.parameters.iter().map(|p| p.name.clone()).collect(),
            reactions,
            self.initial
                .iter()
                .map(|s| (s.state.clone(), s.probability))
                .collect(),
            observed,
        )
    }

    pub fn prior(&self) -> Result<PriorSpec> {
        PriorSpec::new(
            self.parameters.iter().map(|p| p.prior_mean).collect(),
            self.parameters.iter().map(|p| p.prior_sd).collect(),
        )
    }

    /// Reference parameter values, if every parameter has one.
    pub fn reference_values(&self) -> Option<Vec<f64>> {
        self.parameters.iter().map(|p| p.value).collect()
    }
}
