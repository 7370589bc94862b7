//! File writers for distributions, samples, level logs and reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mfst_core::fsp::FspSolution;
use mfst_core::multifi::LevelRecord;
use mfst_core::stmcmc::Particle;
use mfst_core::{Error, Result};
use serde::Serialize;

/// Schema version stamped on every file this crate writes.
pub const OUTPUT_FORMAT_VERSION: u32 = 1;

/// Shortest round-trip text for a float, switching to exponent form for
/// very small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes the joint distribution at output `k`, one row per state.
pub fn write_distribution(path: &Path, sol: &FspSolution, k: usize, species: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<&str> = species.iter().map(String::as_str).collect();
    header.push("probability");
    w.write_record(&header)?;
    for (i, x) in sol.space.states().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(fmt_f64(sol.distributions[k][i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Final population, one particle per row.
pub fn write_samples(path: &Path, particles: &[Particle], names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.extend(["log_likelihood", "log_prior"]);
    w.write_record(&header)?;
    for p in particles {
        let mut row: Vec<String> = p.theta.iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(p.log_like));
        row.push(fmt_f64(p.log_prior));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct VersionedLevel<'a> {
    format_version: u32,
    #[serde(flatten)]
    record: &'a LevelRecord,
}

/// Appends level records to a JSON-lines file, flushing after each one so
/// that an aborted run keeps everything logged so far.
pub struct LevelLog {
    w: BufWriter<File>,
}

impl LevelLog {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(LevelLog { w: create(path)? })
    }

    pub fn append(&mut self, record: &LevelRecord) -> Result<()> {
        let line = serde_json::to_string(&VersionedLevel {
            format_version: OUTPUT_FORMAT_VERSION,
            record,
        })?;
        writeln!(self.w, "{line}")?;
        self.w.flush()?;
        Ok(())
    }
}

/// Reads a level log written by [`LevelLog`].
pub fn read_level_log(path: &Path) -> Result<Vec<LevelRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l)?;
            let version = v.get("format_version").and_then(|x| x.as_u64());
            if version != Some(OUTPUT_FORMAT_VERSION as u64) {
                return Err(Error::config(format!("level log line has format_version {version:?}")));
            }
            v.as_object_mut().map(|o| o.remove("format_version"));
            Ok(serde_json::from_value(v)?)
        })
        .collect()
}
