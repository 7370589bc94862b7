//! Run configuration: JSON schema, path resolution and validation.

use std::path::{Path, PathBuf};

use mfst_core::fsp::{AdaptiveFspConfig, FidelityBound};
use mfst_core::likelihood::ModelHierarchy;
use mfst_core::model::{library, ModelDefinition, PriorSpec, ReactionNetwork};
use mfst_core::multifi::BridgingStrategy;
use mfst_core::stmcmc::SamplerConfig;
use mfst_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

/// Prefix of the environment variables that override command-line flags.
pub const ENV_PREFIX: &str = "MFST_";

const BUILTIN_PREFIX: &str = "builtin:";

/// Either an explicit list of nested bounds or the interpolation rule
/// `b_i(l) = floor(c_i + (l - 1)(d_i - c_i)/(l_max + 1))` topped by `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HierarchySpec {
    Explicit { bounds: Vec<Vec<i64>> },
    Interpolated { c: Vec<i64>, d: Vec<i64>, l_max: usize },
}

impl HierarchySpec {
    pub fn build(&self, fsp: &AdaptiveFspConfig) -> Result<ModelHierarchy> {
        match self {
            HierarchySpec::Explicit { bounds } => {
                let levels = bounds
                    .iter()
                    .map(|b| FidelityBound::new(b.clone()))
                    .collect::<Result<Vec<_>>>()?;
                ModelHierarchy::new(levels, fsp.clone())
            }
            HierarchySpec::Interpolated { c, d, l_max } => {
                ModelHierarchy::interpolated(c, d, *l_max, fsp.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    /// Log10 parameters; the model's reference values when omitted.
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    pub times: Vec<f64>,
    /// Bounding box; the top of the hierarchy when omitted.
    #[serde(default)]
    pub bound: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    pub times: Vec<f64>,
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceSpec {
    /// Paths to one inference config per candidate model.
    pub models: Vec<PathBuf>,
    /// Prior probability of each model class; uniform when omitted.
    #[serde(default)]
    pub prior_weights: Option<Vec<f64>>,
}

fn default_strategy() -> String {
    "tuned-it".into()
}
fn one() -> f64 {
    1.0
}
fn one_worker() -> usize {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_version() -> u32 {
    CONFIG_FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub format_version: u32,
    /// Model definition file, or `builtin:<name>`.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub hierarchy: Option<HierarchySpec>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "one")]
    pub kappa_bridge: f64,
    #[serde(default = "one")]
    pub kappa_cross: f64,
    #[serde(default)]
    pub fsp: AdaptiveFspConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_worker")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub solve: Option<SolveSpec>,
    #[serde(default)]
    pub simulate: Option<SimulateSpec>,
    #[serde(default)]
    pub evidence: Option<EvidenceSpec>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub strategy: Option<String>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    /// Reads a config file and makes every relative path in it relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(m) = &self.model {
            if !m.starts_with(BUILTIN_PREFIX) {
                self.model = Some(resolve(base, Path::new(m)).to_string_lossy().into_owned());
            }
        }
        if let Some(d) = &self.dataset {
            self.dataset = Some(resolve(base, d));
        }
        if let Some(ev) = &mut self.evidence {
            for m in &mut ev.models {
                *m = resolve(base, m);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(s) = &o.strategy {
            self.strategy = s.clone();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks settings shared by all commands.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::config(format!(
                "config format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        self.sampler.validate()?;
        self.fsp.validate()?;
        self.strategy()?;
        Ok(())
    }

    pub fn strategy(&self) -> Result<BridgingStrategy> {
        BridgingStrategy::from_name(&self.strategy, self.kappa_bridge, self.kappa_cross)
    }

    pub fn load_model(&self) -> Result<LoadedModel> {
        let source = self
            .model
            .as_deref()
            .ok_or_else(|| Error::config("config has no 'model' entry"))?;
        LoadedModel::load(source)
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        let p = self
            .dataset
            .as_deref()
            .ok_or_else(|| Error::config("config has no 'dataset' entry"))?;
        if !p.is_file() {
            return Err(Error::config(format!("dataset {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn hierarchy(&self) -> Result<ModelHierarchy> {
        self.hierarchy
            .as_ref()
            .ok_or_else(|| Error::config("config has no 'hierarchy' entry"))?
            .build(&self.fsp)
    }
}

/// A compiled model with its prior and optional reference parameters.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub definition: ModelDefinition,
    pub network: ReactionNetwork,
    pub prior: PriorSpec,
    pub reference: Option<Vec<f64>>,
}

fn builtin(name: &str) -> Option<library::BenchmarkModel> {
    let numbered = |prefix: &str| -> Option<usize> {
        name.strip_prefix(prefix)?.parse().ok().filter(|&n| n >= 2)
    };
    match name {
        "birth_death" => Some(library::birth_death()),
        "repressilator" => Some(library::repressilator()),
        "il1beta" => Some(library::il1beta()),
        _ => numbered("bursting_gene_")
            .map(library::bursting_gene)
            .or_else(|| numbered("compartmental_gene_").map(library::compartmental_gene)),
    }
}

impl LoadedModel {
    /// Loads `builtin:<name>` or a model definition file.
    pub fn load(source: &str) -> Result<Self> {
        let definition = if let Some(name) = source.strip_prefix(BUILTIN_PREFIX) {
            builtin(name)
                .ok_or_else(|| {
                    Error::config(format!(
                        "unknown built-in model '{name}' (birth_death, bursting_gene_<n>, \
                         compartmental_gene_<n>, repressilator, il1beta)"
                    ))
                })?
                .definition
        } else {
            let text = std::fs::read_to_string(source)
                .map_err(|e| Error::config(format!("cannot read model {source}: {e}")))?;
            ModelDefinition::from_json(&text).map_err(|e| Error::config(format!("{source}: {e}")))?
        };
        Ok(LoadedModel {
            network: definition.network()?,
            prior: definition.prior()?,
            reference: definition.reference_values(),
            definition,
        })
    }

    /// `theta` if given, else the model's reference values.
    pub fn theta_or_reference(&self, theta: Option<&Vec<f64>>) -> Result<Vec<f64>> {
        let theta = match theta {
            Some(t) => t.clone(),
            None => self.reference.clone().ok_or_else(|| {
                Error::config("no theta given and the model has no reference parameter values")
            })?,
        };
        self.network.check_theta(&theta)?;
        Ok(theta)
    }
}
