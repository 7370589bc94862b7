//! Running estimate of the log evidence as a product of per-level ratios.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stmcmc::WeightStats;

/// `(log c_l, Var[log c_l])` for one level's unnormalized weights.
pub fn level_evidence_ratio(stats: &WeightStats) -> (f64, f64) {
    (stats.log_mean, stats.log_mean_variance)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvidenceAccumulator {
    pub log_ratios: Vec<f64>,
    pub variances: Vec<f64>,
    complete: bool,
}

impl EvidenceAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, stats: &WeightStats) {
        let (c, v) = level_evidence_ratio(stats);
        self.push_raw(c, v);
    }

    pub fn push_raw(&mut self, log_ratio: f64, variance: f64) {
        self.log_ratios.push(log_ratio);
        self.variances.push(variance);
    }

    /// Marks that the run reached `beta = 1` on the top model.
    pub fn mark_complete(&mut self) {
        self.complete = true;
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }
}

/// `(log Z, sigma)` of a finished run. An empty but complete accumulator
/// gives `(0, 0)`.
pub fn total_log_evidence(acc: &EvidenceAccumulator) -> Result<(f64, f64)> {
    if !acc.complete {
        return Err(Error::Contract(
            "log evidence requested before the run reached beta = 1 on the top model".into(),
        ));
    }
    let log_z = acc.log_ratios.iter().sum();
    let sigma = acc.variances.iter().sum::<f64>().sqrt();
    Ok((log_z, sigma))
}
