//! The four workflows behind the `mfst` subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mfst_core::fsp::{solve_cme_adaptive, FidelityBound};
use mfst_core::likelihood::{CmeLikelihood, LikelihoodModel, SnapshotDataset};
use mfst_core::multifi::run_multifidelity_observed;
use mfst_core::ssa::generate_snapshot_dataset;
use mfst_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{write_distribution, write_json, write_samples, LevelLog, OUTPUT_FORMAT_VERSION};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const LEVEL_LOG_FILE: &str = "levels.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const DATASET_FILE: &str = "dataset.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SOLVE_REPORT_FILE: &str = "solve_report.json";
pub const EVIDENCE_FILE: &str = "evidence.json";
pub const EVIDENCE_TABLE_FILE: &str = "evidence.csv";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub format_version: u32,
    pub model: String,
    pub theta: Vec<f64>,
    pub bound: Vec<i64>,
    pub times: Vec<f64>,
    pub files: Vec<String>,
    pub total_probability: Vec<f64>,
    pub truncation_error: Vec<f64>,
    pub frozen_mass: Vec<f64>,
    pub final_fsp_error: f64,
    pub states_used: usize,
    pub expansions: usize,
    pub solve_time_seconds: f64,
}

/// Forward solve: per-time distribution CSVs plus an error report.
pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let spec = cfg
        .solve
        .as_ref()
        .ok_or_else(|| Error::config("config has no 'solve' section"))?;
    let model = cfg.load_model()?;
    let theta = model.theta_or_reference(spec.theta.as_ref())?;
    let bound = match (&spec.bound, &cfg.hierarchy) {
        (Some(b), _) => FidelityBound::new(b.clone())?,
        (None, Some(_)) => {
            let h = cfg.hierarchy()?;
            h.bound(h.top()).clone()
        }
        (None, None) => return Err(Error::config("solve needs 'solve.bound' or a 'hierarchy'")),
    };
    if bound.0.len() != model.network.num_species() {
        return Err(Error::config(format!(
            "bound has {} entries but the model has {} species",
            bound.0.len(),
            model.network.num_species()
        )));
    }
    let clock = Instant::now();
    let sol = solve_cme_adaptive(&model.network, &theta, &spec.times, &bound, &model.network.initial, &cfg.fsp)?;
    let elapsed = clock.elapsed().as_secs_f64();
    let names: Vec<String> = model.network.species.iter().map(|s| s.name.clone()).collect();
    let mut files = Vec::new();
    for k in 0..spec.times.len() {
        let name = format!("distribution_t{k}.csv");
        write_distribution(&cfg.out.join(&name), &sol, k, &names)?;
        files.push(name);
    }
    let total: Vec<f64> = sol.distributions.iter().map(|p| p.iter().sum()).collect();
    let report = SolveReport {
        format_version: OUTPUT_FORMAT_VERSION,
        model: model.definition.name.clone(),
        theta,
        bound: bound.0.clone(),
        times: spec.times.clone(),
        files,
        final_fsp_error: total.last().map_or(0.0, |s| 1.0 - s),
        total_probability: total,
        truncation_error: sol.truncation_error.clone(),
        frozen_mass: sol.frozen_mass.clone(),
        states_used: sol.space.len(),
        expansions: sol.expansions,
        solve_time_seconds: elapsed,
    };
    write_json(&cfg.out.join(SOLVE_REPORT_FILE), &report)?;
    Ok(report)
}

/// Simulated snapshot dataset plus its manifest.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let spec = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Error::config("config has no 'simulate' section"))?;
    if spec.n_cells == 0 {
        return Err(Error::config("simulate.n_cells must be at least 1"));
    }
    let model = cfg.load_model()?;
    let theta = model.theta_or_reference(spec.theta.as_ref())?;
    let (data, manifest) = mfst_core::with_workers(cfg.workers, || {
        generate_snapshot_dataset(&model.network, &theta, &spec.times, spec.n_cells, cfg.seed)
    })??;
    let path = cfg.out.join(DATASET_FILE);
    let mut w = crate::output::create(&path)?;
    data.write_csv(&mut w)?;
    write_json(&cfg.out.join(MANIFEST_FILE), &manifest)?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferReport {
    pub format_version: u32,
    pub status: String,
    pub error: Option<String>,
    pub model: String,
    pub strategy: String,
    pub seed: u64,
    pub parameter_names: Vec<String>,
    pub log_evidence: Option<f64>,
    pub log_evidence_sigma: Option<f64>,
    pub levels: usize,
    pub full_model_solves: u64,
    pub per_fidelity_solve_counts: Vec<u64>,
    pub top_solves_before_first_bridge: u64,
    pub posterior_mean: Vec<f64>,
    pub posterior_std: Vec<f64>,
    pub wall_time_seconds: f64,
    /// The fully resolved configuration; feeding it back reproduces the run.
    pub config: RunConfig,
}

/// Runs the selected strategy to `beta = 1` on the top model. On a sampler
/// abort the level log and a failure report are still written.
pub fn cmd_infer(cfg: &RunConfig) -> Result<InferReport> {
    cfg.validate()?;
    let strategy = cfg.strategy()?;
    let model = cfg.load_model()?;
    let dataset_path = cfg.dataset_path()?;
    let hierarchy = cfg.hierarchy()?;
    let data = SnapshotDataset::from_path(dataset_path, &model.network)?;
    let likelihood = CmeLikelihood::new(model.network.clone(), data, hierarchy)?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut log = LevelLog::create(&cfg.out.join(LEVEL_LOG_FILE))?;
    let mut log_error = None;
    let clock = Instant::now();
    let result = run_multifidelity_observed(
        &likelihood,
        &model.prior,
        &cfg.sampler,
        &strategy,
        cfg.seed,
        cfg.workers,
        &mut |rec| {
            if let Err(e) = log.append(rec) {
                log_error.get_or_insert(e);
            }
        },
    );
    let wall = clock.elapsed().as_secs_f64();
    if let Some(e) = log_error {
        return Err(e);
    }
    let names = model.network.parameter_names.clone();
    let mut report = InferReport {
        format_version: OUTPUT_FORMAT_VERSION,
        status: "completed".into(),
        error: None,
        model: model.definition.name.clone(),
        strategy: strategy.name().into(),
        seed: cfg.seed,
        parameter_names: names.clone(),
        log_evidence: None,
        log_evidence_sigma: None,
        levels: 0,
        full_model_solves: 0,
        per_fidelity_solve_counts: likelihood.solve_counts(),
        top_solves_before_first_bridge: 0,
        posterior_mean: Vec::new(),
        posterior_std: Vec::new(),
        wall_time_seconds: wall,
        config: cfg.clone(),
    };
    match result {
        Ok(out) => {
            write_samples(&cfg.out.join(SAMPLES_FILE), &out.particles, &names)?;
            report.log_evidence = Some(out.log_evidence);
            report.log_evidence_sigma = Some(out.log_evidence_sigma);
            report.levels = out.levels.len();
            report.full_model_solves = *out.solve_counts.last().unwrap_or(&0);
            report.top_solves_before_first_bridge = out.top_solves_before_first_bridge();
            report.per_fidelity_solve_counts = out.solve_counts.clone();
            report.posterior_mean = out.posterior_mean();
            report.posterior_std = out.posterior_std();
            write_json(&cfg.out.join(REPORT_FILE), &report)?;
            Ok(report)
        }
        Err(e) => {
            report.status = "failed".into();
            report.error = Some(e.to_string());
            write_json(&cfg.out.join(REPORT_FILE), &report)?;
            Err(e)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceRow {
    pub name: String,
    pub config: PathBuf,
    pub log_evidence: f64,
    pub log_evidence_sigma: f64,
    pub wall_time_seconds: f64,
    pub prior_weight: f64,
    pub posterior_probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceReport {
    pub format_version: u32,
    pub models: Vec<EvidenceRow>,
    /// `log_bayes_factors[i][j] = log Z_i - log Z_j`.
    pub log_bayes_factors: Vec<Vec<f64>>,
    /// Standard error of each log Bayes factor.
    pub log_bayes_factor_sigma: Vec<Vec<f64>>,
}

/// Model-class posterior from log evidences and prior weights.
pub fn class_posterior(log_z: &[f64], prior: &[f64]) -> Vec<f64> {
    let lw: Vec<f64> = log_z.iter().zip(prior).map(|(z, p)| z + p.ln()).collect();
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = lw.iter().map(|v| (v - max).exp()).sum();
    lw.iter().map(|v| (v - max).exp() / s).collect()
}

fn same_data(a: &SnapshotDataset, b: &SnapshotDataset) -> bool {
    a.times() == b.times() && a.cells() == b.cells() && a.species_names() == b.species_names()
}

/// Runs inference for each candidate model on a shared dataset and tabulates
/// log evidence, pairwise Bayes factors and the class posterior.
pub fn cmd_evidence(cfg: &RunConfig, child: &crate::config::Overrides) -> Result<EvidenceReport> {
    let spec = cfg
        .evidence
        .as_ref()
        .ok_or_else(|| Error::config("config has no 'evidence' section"))?;
    let k = spec.models.len();
    if k < 2 {
        return Err(Error::config("evidence needs at least two model configs"));
    }
    let prior = match &spec.prior_weights {
        Some(w) if w.len() != k || w.iter().any(|v| !(*v > 0.0)) => {
            return Err(Error::config("prior_weights must have one positive entry per model"))
        }
        Some(w) => {
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        }
        None => vec![1.0 / k as f64; k],
    };
    let mut configs = Vec::with_capacity(k);
    let mut reference: Option<SnapshotDataset> = None;
    for (i, path) in spec.models.iter().enumerate() {
        let mut c = RunConfig::load(path)?;
        c.apply(child);
        c.out = cfg.out.join(format!("model_{i}_{}", stem(path)));
        c.validate()?;
        let model = c.load_model()?;
        let data = SnapshotDataset::from_path(c.dataset_path()?, &model.network)?;
        match &reference {
            None => reference = Some(data),
            Some(r) if !same_data(r, &data) => {
                return Err(Error::config(format!(
                    "{} uses a different dataset from {}",
                    path.display(),
                    spec.models[0].display()
                )))
            }
            Some(_) => {}
        }
        configs.push((path.clone(), c));
    }
    let mut rows = Vec::with_capacity(k);
    for ((path, c), w) in configs.iter().zip(&prior) {
        let r = cmd_infer(c)?;
        rows.push(EvidenceRow {
            name: r.model.clone(),
            config: path.clone(),
            log_evidence: r.log_evidence.unwrap_or(f64::NAN),
            log_evidence_sigma: r.log_evidence_sigma.unwrap_or(f64::NAN),
            wall_time_seconds: r.wall_time_seconds,
            prior_weight: *w,
            posterior_probability: 0.0,
        });
    }
    let log_z: Vec<f64> = rows.iter().map(|r| r.log_evidence).collect();
    for (r, p) in rows.iter_mut().zip(class_posterior(&log_z, &prior)) {
        r.posterior_probability = p;
    }
    let bf = rows
        .iter()
        .map(|a| rows.iter().map(|b| a.log_evidence - b.log_evidence).collect())
        .collect();
    let bf_sigma = rows
        .iter()
        .map(|a| {
            rows.iter()
                .map(|b| (a.log_evidence_sigma.powi(2) + b.log_evidence_sigma.powi(2)).sqrt())
                .collect()
        })
        .collect();
    let report = EvidenceReport {
        format_version: OUTPUT_FORMAT_VERSION,
        models: rows,
        log_bayes_factors: bf,
        log_bayes_factor_sigma: bf_sigma,
    };
    write_json(&cfg.out.join(EVIDENCE_FILE), &report)?;
    write_evidence_table(&cfg.out.join(EVIDENCE_TABLE_FILE), &report)?;
    Ok(report)
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned())
}

fn write_evidence_table(path: &Path, report: &EvidenceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(crate::output::create(path)?);
    w.write_record([
        "model",
        "log_evidence",
        "log_evidence_sigma",
        "wall_time_seconds",
        "prior_weight",
        "posterior_probability",
    ])?;
    for r in &report.models {
        w.write_record([
            r.name.clone(),
            crate::output::fmt_f64(r.log_evidence),
            crate::output::fmt_f64(r.log_evidence_sigma),
            format!("{:.3}", r.wall_time_seconds),
            crate::output::fmt_f64(r.prior_weight),
            crate::output::fmt_f64(r.posterior_probability),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable evidence table.
pub fn format_evidence_table(report: &EvidenceReport) -> String {
    let mut s = format!(
        "{:<24} {:>16} {:>10} {:>10} {:>10}\n",
        "model", "log Z", "± sigma", "time [s]", "P(model)"
    );
    for r in &report.models {
        s.push_str(&format!(
            "{:<24} {:>16.4} {:>10.4} {:>10.2} {:>10.4}\n",
            r.name, r.log_evidence, r.log_evidence_sigma, r.wall_time_seconds, r.posterior_probability
        ));
    }
    s.push_str("\nlog Bayes factors (row vs column):\n");
    for (i, row) in report.log_bayes_factors.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&report.log_bayes_factor_sigma[i])
            .map(|(b, e)| format!("{b:>9.3} ± {e:<6.3}"))
            .collect();
        s.push_str(&format!("{:<24} {}\n", report.models[i].name, cells.join(" ")));
    }
    s
}
