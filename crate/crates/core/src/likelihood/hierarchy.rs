use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsp::{AdaptiveFspConfig, FidelityBound};

/// Nested copy-number boxes `b(1) <= ... <= b(K)` with a shared FSP setup.
///
/// Fidelity indices are 0-based: index `K - 1` is the top model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHierarchy {
    levels: Vec<FidelityBound>,
    fsp: AdaptiveFspConfig,
}

impl ModelHierarchy {
    pub fn new(levels: Vec<FidelityBound>, fsp: AdaptiveFspConfig) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::config("hierarchy needs at least one level"));
        }
        for w in levels.windows(2) {
            if !w[0].le(&w[1]) {
                return Err(Error::config(format!(
                    "hierarchy bounds are not monotone: {:?} then {:?}",
                    w[0].0, w[1].0
                )));
            }
        }
        fsp.validate()?;
        Ok(ModelHierarchy { levels, fsp })
    }

    /// `b(l)_i = floor(c_i + (l - 1)(d_i - c_i)/(L_max + 1))` for
    /// `l = 1..=L_max`, followed by `d` as the top level. Repeated
    /// consecutive bounds are merged.
    pub fn interpolated(c: &[i64], d: &[i64], l_max: usize, fsp: AdaptiveFspConfig) -> Result<Self> {
        if c.len() != d.len() || c.iter().zip(d).any(|(a, b)| a > b) {
            return Err(Error::config(format!(
                "interpolation endpoints must satisfy c <= d elementwise: c = {c:?}, d = {d:?}"
            )));
        }
        let mut levels: Vec<FidelityBound> = Vec::with_capacity(l_max + 1);
        for l in 1..=l_max {
            let b = c
                .iter()
                .zip(d)
                .map(|(&ci, &di)| {
                    (ci as f64 + (l - 1) as f64 * (di - ci) as f64 / (l_max + 1) as f64).floor() as i64
                })
                .collect();
            levels.push(FidelityBound::new(b)?);
        }
        levels.push(FidelityBound::new(d.to_vec())?);
        levels.dedup();
        ModelHierarchy::new(levels, fsp)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn bound(&self, level: usize) -> &FidelityBound {
        &self.levels[level]
    }

    pub fn levels(&self) -> &[FidelityBound] {
        &self.levels
    }

    pub fn fsp(&self) -> &AdaptiveFspConfig {
        &self.fsp
    }

    /// Keeps only the top level.
    pub fn top_only(&self) -> ModelHierarchy {
        ModelHierarchy {
            levels: vec![self.levels[self.top()].clone()],
            fsp: self.fsp.clone(),
        }
    }
}
