//! Sparse surrogate CME generators on a truncated state space.
//!
//! Columns index source states and rows index destinations. Outflow that
//! leaves the enumerated set is not materialized as matrix entries; it is
//! split into two rate vectors, one for transitions that exit the box `H(b)`
//! (frozen exterior) and one for transitions that stay inside the box but
//! leave the enumerated subset (projection truncation).

use crate::error::Result;
use crate::fsp::sparse::CsrMatrix;
use crate::fsp::space::TruncatedStateSpace;
use crate::integrate::CmeOperator;
use crate::model::ReactionNetwork;

/// One time-invariant generator block.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    pub matrix: CsrMatrix,
    pub frozen_outflow: Vec<f64>,
    pub truncation_outflow: Vec<f64>,
}

impl SparseGenerator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Column sums of the in-space block, equal to minus the total outflow.
    pub fn column_sums(&self) -> Vec<f64> {
        self.matrix.column_sums()
    }

    /// `y += c * G x` on augmented vectors of length `dim() + 2`.
    fn apply_augmented(&self, c: f64, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        self.matrix.matvec_add(c, &x[..n], &mut y[..n]);
        let mut frozen = 0.0;
        let mut trunc = 0.0;
        for i in 0..n {
            frozen += self.frozen_outflow[i] * x[i];
            trunc += self.truncation_outflow[i] * x[i];
        }
        y[n] += c * frozen;
        y[n + 1] += c * trunc;
    }
}

/// Propensity-weighted factorization `A(t) = sum_k f_k(t) G_k` where the
/// first block collects all autonomous reactions (coefficient 1).
#[derive(Debug, Clone)]
pub struct TimeVaryingGenerator {
    blocks: Vec<SparseGenerator>,
    /// Reaction index driving each block after the first.
    varying: Vec<usize>,
    network: ReactionNetwork,
    theta: Vec<f64>,
}

impl TimeVaryingGenerator {
    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn is_autonomous(&self) -> bool {
        self.varying.is_empty()
    }

    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.blocks.len());
        c.push(1.0);
        for &j in &self.varying {
            c.push(self.network.reactions[j].time_factor(&self.theta, t));
        }
        c
    }

    /// Collapses the factorization at time `t` into a single block.
    pub fn at(&self, t: f64) -> SparseGenerator {
        let coeffs = self.coefficients(t);
        let n = self.dim();
        let mut triplets = Vec::new();
        let mut frozen = vec![0.0; n];
        let mut trunc = vec![0.0; n];
        for (blk, &c) in self.blocks.iter().zip(&coeffs) {
            for r in 0..n {
                for (col, v) in blk.matrix.row(r) {
                    triplets.push((r, col, c * v));
                }
            }
            for i in 0..n {
                frozen[i] += c * blk.frozen_outflow[i];
                trunc[i] += c * blk.truncation_outflow[i];
            }
        }
        SparseGenerator {
            matrix: CsrMatrix::from_triplets(n, n, triplets),
            frozen_outflow: frozen,
            truncation_outflow: trunc,
        }
    }

    pub fn blocks(&self) -> &[SparseGenerator] {
        &self.blocks
    }
}

impl CmeOperator for SparseGenerator {
    fn dim(&self) -> usize {
        self.matrix.nrows() + 2
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn apply(&self, _t: f64, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.apply_augmented(1.0, x, y);
    }

    fn apply_time_derivative(&self, _t: f64, _x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
    }

    fn diagonal(&self, _t: f64) -> Vec<f64> {
        let mut d = self.matrix.diagonal();
        d.extend([0.0, 0.0]);
        d
    }

    fn norm_inf(&self, _t: f64) -> f64 {
        let n = self.matrix.nrows();
        let sink = self
            .frozen_outflow
            .iter()
            .chain(&self.truncation_outflow)
            .map(|v| v.abs())
            .sum::<f64>();
        if n == 0 {
            return 0.0;
        }
        self.matrix.norm_inf().max(sink)
    }
}

impl CmeOperator for TimeVaryingGenerator {
    fn dim(&self) -> usize {
        self.blocks[0].dim() + 2
    }

    fn is_autonomous(&self) -> bool {
        self.varying.is_empty()
    }

    fn apply(&self, t: f64, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (blk, c) in self.blocks.iter().zip(self.coefficients(t)) {
            if c != 0.0 {
                blk.apply_augmented(c, x, y);
            }
        }
    }

    fn apply_time_derivative(&self, t: f64, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let h = 1e-6 * t.abs().max(1.0);
        let lo = self.coefficients((t - h).max(0.0));
        let hi = self.coefficients(t + h);
        let span = t + h - (t - h).max(0.0);
        for (k, blk) in self.blocks.iter().enumerate().skip(1) {
            let d = (hi[k] - lo[k]) / span;
            if d != 0.0 {
                blk.apply_augmented(d, x, y);
            }
        }
    }

    fn diagonal(&self, t: f64) -> Vec<f64> {
        let mut d = vec![0.0; self.dim()];
        for (blk, c) in self.blocks.iter().zip(self.coefficients(t)) {
            for (di, v) in d.iter_mut().zip(blk.matrix.diagonal()) {
                *di += c * v;
            }
        }
        d
    }

    fn norm_inf(&self, t: f64) -> f64 {
        self.blocks
            .iter()
            .zip(self.coefficients(t))
            .map(|(b, c)| c.abs() * CmeOperator::norm_inf(b, t))
            .sum()
    }
}

fn assemble_block(
    net: &ReactionNetwork,
    theta: &[f64],
    space: &TruncatedStateSpace,
    reactions: &[usize],
    time_factor: impl Fn(usize) -> f64,
) -> Result<SparseGenerator> {
    let n = space.len();
    let bound = space.bound();
    let mut triplets = Vec::with_capacity(n * (reactions.len() + 1));
    let mut frozen = vec![0.0; n];
    let mut trunc = vec![0.0; n];
    let mut y = vec![0i64; space.num_species()];
    for ix in 0..n {
        let x = space.state(ix);
        let mut out = 0.0;
        for &j in reactions {
            let r = &net.reactions[j];
            let a = time_factor(j) * r.state_factor(x, theta);
            if !(a >= 0.0) || !a.is_finite() {
                return Err(crate::error::Error::model(format!(
                    "reaction '{}' has invalid propensity {a} at state {x:?}",
                    r.name
                )));
            }
            if a == 0.0 {
                continue;
            }
            out += a;
            for ((yk, xk), nu) in y.iter_mut().zip(x).zip(&r.net_stoich) {
                *yk = xk + nu;
            }
            match space.index_of(&y) {
                Some(iy) => triplets.push((iy, ix, a)),
                None if bound.contains(&y) => trunc[ix] += a,
                None => frozen[ix] += a,
            }
        }
        if out != 0.0 {
            triplets.push((ix, ix, -out));
        }
    }
    Ok(SparseGenerator {
        matrix: CsrMatrix::from_triplets(n, n, triplets),
        frozen_outflow: frozen,
        truncation_outflow: trunc,
    })
}

/// Assembles the surrogate generator on `space` at time `t`.
///
/// Every state of `space` lies inside its bound, so the surrogate propensity
/// coincides with the true one on the enumerated states.
pub fn assemble_generator(
    net: &ReactionNetwork,
    theta: &[f64],
    space: &TruncatedStateSpace,
    t: f64,
) -> Result<SparseGenerator> {
    net.check_theta(theta)?;
    let all: Vec<usize> = (0..net.reactions.len()).collect();
    assemble_block(net, theta, space, &all, |j| {
        net.reactions[j].time_factor(theta, t)
    })
}

/// Assembles the time-factorized generator used by the implicit stepper.
pub fn assemble_time_varying(
    net: &ReactionNetwork,
    theta: &[f64],
    space: &TruncatedStateSpace,
) -> Result<TimeVaryingGenerator> {
    net.check_theta(theta)?;
    let (varying, constant): (Vec<usize>, Vec<usize>) =
        (0..net.reactions.len()).partition(|&j| net.reactions[j].propensity.is_time_varying());
    let mut blocks = vec![assemble_block(net, theta, space, &constant, |_| 1.0)?];
    for &j in &varying {
        blocks.push(assemble_block(net, theta, space, &[j], |_| 1.0)?);
    }
    Ok(TimeVaryingGenerator {
        blocks,
        varying,
        network: net.clone(),
        theta: theta.to_vec(),
    })
}

/// Total probability outside the enumerated set, `1 - sum p`.
pub fn fsp_error_mass(p: &[f64]) -> f64 {
    1.0 - p.iter().sum::<f64>()
}
