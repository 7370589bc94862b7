//! Restarted GMRES with right Jacobi preconditioning.

use super::{dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `M x = b` where `apply(x, y)` writes `y = M x`. `x` holds the
/// initial guess on entry and the solution on exit.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    tol: f64,
    max_iters: usize,
) -> GmresOutcome {
    let n = b.len();
    let restart = restart.max(1).min(n.max(1));
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut v: Vec<Vec<f64>> = vec![vec![0.0; n]; restart + 1];
    let mut h = vec![vec![0.0; restart]; restart + 1];
    let mut cs = vec![0.0; restart];
    let mut sn = vec![0.0; restart];
    let mut g = vec![0.0; restart + 1];
    let mut iterations = 0;

    loop {
        apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        if beta <= tol || iterations >= max_iters {
            return GmresOutcome {
                converged: beta <= tol,
                iterations,
                residual: beta,
            };
        }
        for i in 0..n {
            v[0][i] = r[i] / beta;
        }
        g.iter_mut().for_each(|e| *e = 0.0);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            iterations += 1;
            for i in 0..n {
                z[i] = v[k][i] * inv_diag[i];
            }
            apply(&z, &mut w);
            for j in 0..=k {
                let hjk = dot(&w, &v[j]);
                h[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * v[j][i];
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            if hn > 0.0 {
                for i in 0..n {
                    v[k + 1][i] = w[i] / hn;
                }
            }
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= tol || hn == 0.0 || iterations >= max_iters {
                break;
            }
        }
        // back substitution for the preconditioned update
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, yj) in y.iter().enumerate() {
                acc += yj * v[j][i];
            }
            x[i] += acc * inv_diag[i];
        }
    }
}
