//! Time integration of `dp/dt = A(t) p` on truncated spaces.

mod dense;
mod gmres;
mod krylov;
mod pade;
mod rosenbrock;

pub use dense::{dense_reference_expm, DENSE_ORACLE_MAX_DIM};
pub use gmres::{gmres, GmresOutcome};
pub use krylov::{expm_multiply_krylov, KrylovStepper};
pub use pade::expm_pade;
pub use rosenbrock::{step_implicit, RosenbrockStepper, ROS34PW2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear operator `A(t)` acting on (possibly augmented) probability vectors.
pub trait CmeOperator: Sync {
    fn dim(&self) -> usize;
    fn is_autonomous(&self) -> bool;
    /// `y = A(t) x`.
    fn apply(&self, t: f64, x: &[f64], y: &mut [f64]);
    /// `y = (dA/dt)(t) x`.
    fn apply_time_derivative(&self, t: f64, x: &[f64], y: &mut [f64]);
    fn diagonal(&self, t: f64) -> Vec<f64>;
    fn norm_inf(&self, t: f64) -> f64;
}

/// Integrator tolerances and limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub krylov_basis: usize,
    /// Upper bound on a single internal step; `None` means unbounded.
    pub max_step: Option<f64>,
    /// Local error tolerance per unit time for the Krylov sub-stepping.
    pub krylov_tol: f64,
    pub max_substeps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-4,
            krylov_basis: 30,
            max_step: None,
            krylov_tol: 1e-14,
            max_substeps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(format!("integrator: {m}")));
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || !(self.krylov_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.krylov_basis < 2 {
            return bad("krylov_basis must be at least 2");
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad("max_step must be positive");
            }
        }
        if self.max_substeps == 0 {
            return bad("max_substeps must be positive");
        }
        Ok(())
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Dense test operator, handy for oracles and small problems.
#[derive(Debug, Clone)]
pub struct DenseOperator(pub nalgebra::DMatrix<f64>);

impl CmeOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn apply(&self, _t: f64, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for (r, yr) in y.iter_mut().enumerate().take(n) {
            *yr = (0..n).map(|c| self.0[(r, c)] * x[c]).sum();
        }
    }

    fn apply_time_derivative(&self, _t: f64, _x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
    }

    fn diagonal(&self, _t: f64) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    fn norm_inf(&self, _t: f64) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
