//! Krylov approximation of `exp(tA) v` with incomplete orthogonalization
//! and local-error-controlled sub-stepping.

use nalgebra::DMatrix;

use super::{dot, expm_pade, norm2, CmeOperator, IntegratorConfig};
use crate::error::{Error, Result};

const IOP_DEPTH: usize = 2;
const SAFETY: f64 = 0.9;
const ACCEPT_SLACK: f64 = 1.2;
const MAX_REJECTIONS: usize = 50;

fn round_two_digits(t: f64) -> f64 {
    if !(t > 0.0) || !t.is_finite() {
        return t;
    }
    let s = 10f64.powf(t.log10().floor() - 1.0);
    (t / s).ceil() * s
}

/// Incremental Krylov integrator for an autonomous operator.
///
/// Each call to [`KrylovStepper::advance`] takes one accepted sub-step and
/// remembers the suggested size of the next one.
pub struct KrylovStepper<'a, A: CmeOperator + ?Sized> {
    op: &'a A,
    basis: usize,
    tol: f64,
    max_step: f64,
    anorm: f64,
    suggested: Option<f64>,
    basis_vectors: Vec<Vec<f64>>,
}

impl<'a, A: CmeOperator + ?Sized> KrylovStepper<'a, A> {
    pub fn new(op: &'a A, cfg: &IntegratorConfig) -> Self {
        let n = op.dim();
        KrylovStepper {
            op,
            basis: cfg.krylov_basis.min(n).max(1),
            tol: cfg.krylov_tol,
            max_step: cfg.max_step.unwrap_or(f64::INFINITY),
            anorm: op.norm_inf(0.0),
            suggested: None,
            basis_vectors: Vec::new(),
        }
    }

    /// Advances `w` by at most `max_dt` and returns the step actually taken.
    pub fn advance(&mut self, w: &mut [f64], max_dt: f64) -> Result<f64> {
        if max_dt <= 0.0 {
            return Ok(0.0);
        }
        let beta = norm2(w);
        if beta == 0.0 || self.anorm == 0.0 {
            return Ok(max_dt);
        }
        let m = self.basis;
        let n = w.len();
        let anorm = self.anorm;
        let mut xm = 1.0 / m as f64;
        let t_suggest = *self.suggested.get_or_insert_with(|| {
            let mf = (m + 1) as f64;
            let fact = (mf / std::f64::consts::E).powf(mf) * (2.0 * std::f64::consts::PI * mf).sqrt();
            round_two_digits((1.0 / anorm) * ((fact * self.tol) / (4.0 * beta * anorm)).powf(xm))
        });
        let mut t_step = max_dt.min(t_suggest).min(self.max_step);

        if self.basis_vectors.len() < m + 1 {
            self.basis_vectors = vec![vec![0.0; n]; m + 1];
        }
        let v = &mut self.basis_vectors;
        for (vi, wi) in v[0].iter_mut().zip(w.iter()) {
            *vi = wi / beta;
        }
        let mut h = DMatrix::<f64>::zeros(m + 2, m + 2);
        let mut mb = m;
        let mut happy = false;
        let btol = 1e-14 * anorm.max(1.0);
        let mut p = vec![0.0; n];
        for j in 0..m {
            self.op.apply(0.0, &v[j], &mut p);
            for i in j.saturating_sub(IOP_DEPTH - 1)..=j {
                let hij = dot(&v[i], &p);
                h[(i, j)] = hij;
                for (pk, vk) in p.iter_mut().zip(&v[i]) {
                    *pk -= hij * vk;
                }
            }
            let s = norm2(&p);
            if s < btol {
                happy = true;
                mb = j + 1;
                t_step = max_dt.min(self.max_step);
                break;
            }
            h[(j + 1, j)] = s;
            for (vk, pk) in v[j + 1].iter_mut().zip(&p) {
                *vk = pk / s;
            }
        }
        let mut avnorm = 0.0;
        if !happy {
            h[(m + 1, m)] = 1.0;
            self.op.apply(0.0, &v[m], &mut p);
            avnorm = norm2(&p);
        }

        let mut rejections = 0;
        let (f, err_loc) = loop {
            let mx = if happy { mb } else { mb + 2 };
            let f = expm_pade(&(h.view((0, 0), (mx, mx)) * t_step));
            if happy {
                break (f, 0.0);
            }
            let phi1 = (beta * f[(m, 0)]).abs();
            let phi2 = (beta * f[(m + 1, 0)] * avnorm).abs();
            let err = if phi1 > 10.0 * phi2 {
                xm = 1.0 / m as f64;
                phi2
            } else if phi1 > phi2 {
                xm = 1.0 / m as f64;
                phi1 * phi2 / (phi1 - phi2)
            } else {
                xm = 1.0 / (m.max(2) - 1) as f64;
                phi1
            };
            if err <= ACCEPT_SLACK * t_step * self.tol {
                break (f, err);
            }
            rejections += 1;
            if rejections > MAX_REJECTIONS {
                return Err(Error::Integrator {
                    time: f64::NAN,
                    message: format!("Krylov step rejected {MAX_REJECTIONS} times (error {err:e})"),
                });
            }
            t_step = round_two_digits(SAFETY * t_step * (t_step * self.tol / err).powf(xm));
        };

        let mx = if happy { mb } else { mb + 1 };
        w.iter_mut().for_each(|x| *x = 0.0);
        for (i, vi) in v.iter().enumerate().take(mx) {
            let c = beta * f[(i, 0)];
            for (wk, vk) in w.iter_mut().zip(vi) {
                *wk += c * vk;
            }
        }
        self.suggested = Some(if happy || err_loc == 0.0 {
            (t_step * 10.0).max(t_suggest)
        } else {
            round_two_digits(SAFETY * t_step * (t_step * self.tol / err_loc).powf(xm))
        });
        Ok(t_step)
    }
}

/// `exp(dt A) v` for an autonomous operator.
pub fn expm_multiply_krylov<A: CmeOperator + ?Sized>(
    op: &A,
    v: &[f64],
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    if !(dt >= 0.0) {
        return Err(Error::Contract(format!("negative time step {dt}")));
    }
    if !op.is_autonomous() {
        return Err(Error::Contract(
            "Krylov exponential requires a time-invariant operator".into(),
        ));
    }
    let mut w = v.to_vec();
    if dt == 0.0 {
        return Ok(w);
    }
    let mut stepper = KrylovStepper::new(op, cfg);
    let mut t = 0.0;
    let mut steps = 0;
    while t < dt {
        let remaining = dt - t;
        let taken = stepper.advance(&mut w, remaining).map_err(|e| match e {
            Error::Integrator { message, .. } => Error::Integrator { time: t, message },
            other => other,
        })?;
        t = if taken >= remaining { dt } else { t + taken };
        steps += 1;
        if steps > cfg.max_substeps {
            return Err(Error::Integrator {
                time: t,
                message: format!("exceeded {} Krylov sub-steps", cfg.max_substeps),
            });
        }
    }
    Ok(w)
}
