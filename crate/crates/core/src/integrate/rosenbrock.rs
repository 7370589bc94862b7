//! Four-stage, third-order, L-stable Rosenbrock-W method (ROS34PW2) with an
//! embedded second-order error estimate.

use super::{gmres, norm2, CmeOperator, IntegratorConfig};
use crate::error::{Error, Result};

/// Tableau in `(A, Gamma)` form; `Gamma` includes the diagonal `gamma`.
pub struct RosenbrockTableau {
    pub gamma: f64,
    pub a: [[f64; 4]; 4],
    pub g: [[f64; 4]; 4],
    pub b: [f64; 4],
    pub b_embedded: [f64; 4],
}

const GAMMA: f64 = 4.358_665_215_084_59e-1;

pub const ROS34PW2: RosenbrockTableau = RosenbrockTableau {
    gamma: GAMMA,
    a: [
        [0.0, 0.0, 0.0, 0.0],
        [8.717_330_430_169_180_1e-1, 0.0, 0.0, 0.0],
        [8.445_706_001_536_942_3e-1, -1.129_906_423_648_418_5e-1, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ],
    g: [
        [GAMMA, 0.0, 0.0, 0.0],
        [-8.717_330_430_169_180_1e-1, GAMMA, 0.0, 0.0],
        [-9.033_805_701_304_408_2e-1, 5.418_067_238_809_532_6e-2, GAMMA, 0.0],
        [
            2.421_238_070_609_534_6e-1,
            -1.223_250_583_904_514_7,
            5.452_602_553_351_021_4e-1,
            GAMMA,
        ],
    ],
    b: [
        2.421_238_070_609_534_6e-1,
        -1.223_250_583_904_514_7,
        1.545_260_255_335_102,
        4.358_665_215_084_59e-1,
    ],
    b_embedded: [
        3.781_090_314_581_936_9e-1,
        -9.604_229_221_242_317_8e-2,
        0.5,
        2.179_332_607_542_295e-1,
    ],
};

const GMRES_RESTART: usize = 30;
const GMRES_MAX_ITERS: usize = 3000;

/// Adaptive stepper holding the step-size controller state.
pub struct RosenbrockStepper<'a, A: CmeOperator + ?Sized> {
    op: &'a A,
    abs_tol: f64,
    rel_tol: f64,
    max_step: f64,
    h: Option<f64>,
    work: Vec<Vec<f64>>,
}

impl<'a, A: CmeOperator + ?Sized> RosenbrockStepper<'a, A> {
    pub fn new(op: &'a A, cfg: &IntegratorConfig) -> Self {
        RosenbrockStepper {
            op,
            abs_tol: cfg.abs_tol,
            rel_tol: cfg.rel_tol,
            max_step: cfg.max_step.unwrap_or(f64::INFINITY),
            h: None,
            work: Vec::new(),
        }
    }

    /// Takes one accepted step from `t` toward `t_end`, updating `y` in
    /// place, and returns the new time.
    pub fn advance(&mut self, t: f64, y: &mut [f64], t_end: f64) -> Result<f64> {
        let n = y.len();
        let span = t_end - t;
        if span <= 0.0 {
            return Ok(t);
        }
        let tab = &ROS34PW2;
        if self.work.len() != 8 || self.work[0].len() != n {
            self.work = vec![vec![0.0; n]; 8];
        }
        let mut h = self.h.unwrap_or_else(|| {
            let a = self.op.norm_inf(t);
            if a > 0.0 {
                0.01 / a
            } else {
                span
            }
        });
        h = h.min(self.max_step).min(span);
        let min_h = 1e-14 * t.abs().max(1.0);
        let mut rejected = false;
        loop {
            if h < min_h {
                return Err(Error::Integrator {
                    time: t,
                    message: format!("step size underflow (h = {h:e})"),
                });
            }
            let last = h >= span * (1.0 - 1e-12);
            let h_eff = if last { span } else { h };
            match self.try_step(tab, t, y, h_eff)? {
                Some((err, y_new)) if err <= 1.0 => {
                    y.copy_from_slice(&y_new);
                    let mut factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-1.0 / 3.0) };
                    factor = factor.clamp(0.2, 5.0);
                    if rejected {
                        factor = factor.min(1.0);
                    }
                    self.h = Some((h_eff * factor).min(self.max_step));
                    return Ok(if last { t_end } else { t + h_eff });
                }
                Some((err, _)) => {
                    rejected = true;
                    h = h_eff * (0.9 * err.powf(-1.0 / 3.0)).clamp(0.2, 1.0);
                }
                None => {
                    rejected = true;
                    h = h_eff * 0.25;
                }
            }
        }
    }

    /// One trial step. Returns `None` when a linear solve failed.
    fn try_step(
        &mut self,
        tab: &RosenbrockTableau,
        t: f64,
        y: &[f64],
        h: f64,
    ) -> Result<Option<(f64, Vec<f64>)>> {
        let n = y.len();
        let op = self.op;
        let hg = h * tab.gamma;
        let inv_diag: Vec<f64> = op
            .diagonal(t)
            .iter()
            .map(|d| 1.0 / (1.0 - hg * d).max(1e-300))
            .collect();
        let apply_w = |x: &[f64], out: &mut [f64]| {
            op.apply(t, x, out);
            for i in 0..x.len() {
                out[i] = x[i] - hg * out[i];
            }
        };
        let mut ft = vec![0.0; n];
        if !op.is_autonomous() {
            op.apply_time_derivative(t, y, &mut ft);
        }
        let (ks, rest) = self.work.split_at_mut(4);
        let [ystage, gsum, rhs, tmp] = rest else { unreachable!() };
        for i in 0..4 {
            let alpha_i: f64 = tab.a[i].iter().sum();
            let gamma_i: f64 = tab.g[i].iter().sum();
            ystage.copy_from_slice(y);
            gsum.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..i {
                let (aij, gij) = (tab.a[i][j], tab.g[i][j]);
                for m in 0..n {
                    ystage[m] += aij * ks[j][m];
                    gsum[m] += gij * ks[j][m];
                }
            }
            op.apply(t + alpha_i * h, ystage, rhs);
            op.apply(t, gsum, tmp);
            for m in 0..n {
                rhs[m] = h * (rhs[m] + tmp[m]) + h * h * gamma_i * ft[m];
            }
            let tol = (1e-13 * norm2(rhs)).max(1e-3 * self.abs_tol);
            let k = &mut ks[i];
            for m in 0..n {
                k[m] = rhs[m] * inv_diag[m];
            }
            let out = gmres(apply_w, &inv_diag, rhs, k, GMRES_RESTART, tol, GMRES_MAX_ITERS);
            if !out.converged {
                return Ok(None);
            }
        }
        let mut y_new = y.to_vec();
        let mut err_sq = 0.0;
        for m in 0..n {
            let mut e = 0.0;
            for i in 0..4 {
                y_new[m] += tab.b[i] * ks[i][m];
                e += (tab.b[i] - tab.b_embedded[i]) * ks[i][m];
            }
            let scale = self.abs_tol + self.rel_tol * y[m].abs().max(y_new[m].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Ok(None);
        }
        Ok(Some((err, y_new)))
    }
}

/// Integrates `dp/dt = A(t) p` from `t0` to `t1`.
pub fn step_implicit<A: CmeOperator + ?Sized>(
    op: &A,
    v: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    if !(t1 > t0) {
        return Err(Error::Contract(format!("implicit step needs t1 > t0, got [{t0}, {t1}]")));
    }
    let mut y = v.to_vec();
    let mut stepper = RosenbrockStepper::new(op, cfg);
    let mut t = t0;
    let mut steps = 0;
    while t < t1 {
        t = stepper.advance(t, &mut y, t1)?;
        steps += 1;
        if steps > cfg.max_substeps {
            return Err(Error::Integrator {
                time: t,
                message: format!("exceeded {} implicit steps", cfg.max_substeps),
            });
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_conditions() {
        let tab = &ROS34PW2;
        let alpha: Vec<f64> = (0..4).map(|i| tab.a[i].iter().sum()).collect();
        // beta_ij = alpha_ij + gamma_ij for j < i
        let beta = |i: usize, j: usize| tab.a[i][j] + tab.g[i][j];
        let beta_row: Vec<f64> = (0..4).map(|i| (0..i).map(|j| beta(i, j)).sum()).collect();
        let g = tab.gamma;
        let s1: f64 = tab.b.iter().sum();
        let s2: f64 = (0..4).map(|i| tab.b[i] * beta_row[i]).sum();
        let s3: f64 = (0..4).map(|i| tab.b[i] * alpha[i] * alpha[i]).sum();
        let s4: f64 = (0..4)
            .map(|i| tab.b[i] * (0..i).map(|j| beta(i, j) * beta_row[j]).sum::<f64>())
            .sum();
        assert!((s1 - 1.0).abs() < 1e-14);
        assert!((s2 - (0.5 - g)).abs() < 1e-14);
        assert!((s3 - 1.0 / 3.0).abs() < 1e-14);
        assert!((s4 - (1.0 / 6.0 - g + g * g)).abs() < 1e-14);
        let e1: f64 = tab.b_embedded.iter().sum();
        assert!((e1 - 1.0).abs() < 1e-14);
    }
}
