//! Multifidelity annealing: bridging strategies, the IT criterion, evidence
//! accumulation and the driver that ties them to the ST-MCMC kernels.

mod driver;
mod evidence;
mod strategy;

pub use driver::{run_multifidelity, run_multifidelity_observed, LevelRecord, RunOutput};
pub use evidence::{level_evidence_ratio, total_log_evidence, EvidenceAccumulator};
pub use strategy::{
    ess_bridge_decide, it_criterion, select_next_level, tune_beta_cross_fidelity, BridgingStrategy,
    Decision, LevelChoice,
};
