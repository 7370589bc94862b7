use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ReactionNetwork;

/// Single-cell snapshot measurements grouped by time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    times: Vec<f64>,
    cells: Vec<Vec<Vec<i64>>>,
    observed_species: Vec<usize>,
    species_names: Vec<String>,
}

impl SnapshotDataset {
    pub fn new(
        times: Vec<f64>,
        cells: Vec<Vec<Vec<i64>>>,
        observed_species: Vec<usize>,
        species_names: Vec<String>,
    ) -> Result<Self> {
        if times.len() != cells.len() {
            return Err(Error::config(format!(
                "dataset has {} times but {} cell groups",
                times.len(),
                cells.len()
            )));
        }
        if observed_species.len() != species_names.len() {
            return Err(Error::config("dataset species names do not match observed species"));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config(format!(
                "dataset times must be nonnegative and strictly increasing: {times:?}"
            )));
        }
        for (t, group) in times.iter().zip(&cells) {
            if group.is_empty() {
                return Err(Error::config(format!("no cells measured at time {t}")));
            }
            for c in group {
                if c.len() != observed_species.len() {
                    return Err(Error::config(format!(
                        "cell at time {t} has {} counts, expected {}",
                        c.len(),
                        observed_species.len()
                    )));
                }
                if c.iter().any(|&v| v < 0) {
                    return Err(Error::config(format!("negative count {c:?} at time {t}")));
                }
            }
        }
        Ok(SnapshotDataset {
            times,
            cells,
            observed_species,
            species_names,
        })
    }

    /// A dataset with no measurements.
    pub fn empty(observed_species: Vec<usize>, species_names: Vec<String>) -> Self {
        SnapshotDataset {
            times: Vec::new(),
            cells: Vec::new(),
            observed_species,
            species_names,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn cells(&self) -> &[Vec<Vec<i64>>] {
        &self.cells
    }

    pub fn cells_at(&self, k: usize) -> &[Vec<i64>] {
        &self.cells[k]
    }

    pub fn observed_species(&self) -> &[usize] {
        &self.observed_species
    }

    pub fn species_names(&self) -> &[String] {
        &self.species_names
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks that the observed species exist in `net` under the same names.
    pub fn check_network(&self, net: &ReactionNetwork) -> Result<()> {
        for (&i, name) in self.observed_species.iter().zip(&self.species_names) {
            match net.species.get(i) {
                Some(s) if &s.name == name => {}
                _ => {
                    return Err(Error::config(format!(
                        "dataset column '{name}' does not match species {i} of model '{}'",
                        net.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Parses `time,species...` CSV, resolving column names against `net`.
    pub fn read_csv<R: Read>(reader: R, net: &ReactionNetwork) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("time") {
            return Err(Error::config("dataset header must start with 'time'"));
        }
        let mut observed = Vec::new();
        let mut names = Vec::new();
        for name in header.iter().skip(1) {
            let idx = net.species_index(name).ok_or_else(|| {
                Error::config(format!("dataset column '{name}' is not a species of model '{}'", net.name))
            })?;
            if observed.contains(&idx) {
                return Err(Error::config(format!("dataset column '{name}' repeated")));
            }
            observed.push(idx);
            names.push(name.to_string());
        }
        let mut groups: BTreeMap<u64, (f64, Vec<Vec<i64>>)> = BTreeMap::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            let t: f64 = rec[0]
                .parse()
                .map_err(|_| Error::config(format!("dataset line {line}: bad time '{}'", &rec[0])))?;
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::config(format!("dataset line {line}: invalid time {t}")));
            }
            let counts = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<i64>()
                        .ok()
                        .filter(|v| *v >= 0)
                        .ok_or_else(|| Error::config(format!("dataset line {line}: bad count '{s}'")))
                })
                .collect::<Result<Vec<i64>>>()?;
            if counts.len() != observed.len() {
                return Err(Error::config(format!(
                    "dataset line {line}: expected {} counts, found {}",
                    observed.len(),
                    counts.len()
                )));
            }
            // order-preserving key for nonnegative floats
            let t = t + 0.0;
            groups.entry(t.to_bits()).or_insert_with(|| (t, Vec::new())).1.push(counts);
        }
        let (times, cells) = groups.into_values().unzip();
        SnapshotDataset::new(times, cells, observed, names)
    }

    pub fn from_path(path: &Path, net: &ReactionNetwork) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| {
            Error::config(format!("cannot open dataset {}: {e}", path.display()))
        })?;
        Self::read_csv(f, net)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(self.species_names.iter().cloned());
        w.write_record(&header)?;
        for (t, group) in self.times.iter().zip(&self.cells) {
            for c in group {
                let mut rec = vec![t.to_string()];
                rec.extend(c.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
