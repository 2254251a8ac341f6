//! Periodic tridiagonal solves and a Jacobi-preconditioned BiCGSTAB.

use crate::error::{Error, Result};

/// Solves the periodic tridiagonal system
/// `lower·x[i-1] + diag·x[i] + upper·x[i+1] = rhs[i]` (indices mod n)
/// with constant coefficients, by the Sherman–Morrison correction of the
/// Thomas algorithm.
pub fn solve_cyclic_constant(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let a = vec![lower; n];
    let b = vec![diag; n];
    let c = vec![upper; n];
    solve_cyclic(&a, &b, &c, rhs)
}

/// General periodic tridiagonal solve. Row `i` reads
/// `a[i]·x[i-1] + b[i]·x[i] + c[i]·x[i+1] = r[i]`, indices mod n, so `a[0]`
/// and `c[n-1]` are the corner entries.
pub fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || c.len() != n || r.len() != n {
        return Err(Error::InvalidParams("cyclic solve: length mismatch".into()));
    }
    if n < 3 {
        return Err(Error::InvalidParams(format!("cyclic solve needs n >= 3 (got {n})")));
    }
    let alpha = c[n - 1]; // bottom-left corner, row n-1 column 0
    let beta = a[0]; // top-right corner, row 0 column n-1
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let x = thomas(&a[1..], &bb, &c[..n - 1], r)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(&a[1..], &bb, &c[..n - 1], &u)?;
    let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
    if denom == 0.0 {
        return Err(Error::InvalidParams("cyclic solve: singular correction".into()));
    }
    let factor = (x[0] + beta * x[n - 1] / gamma) / denom;
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
}

/// Non-periodic tridiagonal solve; `sub` and `sup` have length n-1.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut gam = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bet = diag[0];
    if bet == 0.0 {
        return Err(Error::InvalidParams("tridiagonal solve: zero pivot".into()));
    }
    x[0] = r[0] / bet;
    for j in 1..n {
        gam[j] = sup[j - 1] / bet;
        bet = diag[j] - sub[j - 1] * gam[j];
        if bet == 0.0 {
            return Err(Error::InvalidParams("tridiagonal solve: zero pivot".into()));
        }
        x[j] = (r[j] - sub[j - 1] * x[j - 1]) / bet;
    }
    for j in (0..n - 1).rev() {
        x[j] -= gam[j + 1] * x[j + 1];
    }
    Ok(x)
}

pub trait LinearOperator {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Target `‖b - Ax‖₂ / ‖b‖₂`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual<A: LinearOperator>(op: &A, x: &[f64], b: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Right-preconditioned BiCGSTAB with the Jacobi preconditioner. `x` holds the
/// initial guess on entry and the solution on exit.
pub fn bicgstab<A: LinearOperator>(
    op: &A,
    b: &[f64],
    x: &mut [f64],
    settings: &SolverSettings,
) -> Result<SolveStats> {
    let n = op.len();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let target = settings.tol * b_norm;

    let mut r = vec![0.0; n];
    true_residual(op, x, b, &mut r);
    let mut res = norm(&r);
    if res <= target {
        return Ok(SolveStats {
            iterations: 0,
            residual: res / b_norm,
        });
    }
    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);

    for it in 1..=settings.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            // breakdown: restart the shadow residual
            true_residual(op, x, b, &mut r);
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|v| *v = 0.0);
            v.iter_mut().for_each(|v| *v = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv_diag[i] * p[i];
        }
        op.apply(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            true_residual(op, x, b, &mut r);
            res = norm(&r);
            if res <= target {
                return Ok(SolveStats {
                    iterations: it,
                    residual: res / b_norm,
                });
            }
            continue;
        }
        for i in 0..n {
            z[i] = inv_diag[i] * s[i];
        }
        op.apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r);
        if !res.is_finite() {
            return Err(Error::SolverDiverged {
                iterations: it,
                residual: res,
            });
        }
        if res <= target {
            // confirm against the recurrence drift
            true_residual(op, x, b, &mut r);
            res = norm(&r);
            if res <= target {
                return Ok(SolveStats {
                    iterations: it,
                    residual: res / b_norm,
                });
            }
        }
    }
    Err(Error::SolverDiverged {
        iterations: settings.max_iter,
        residual: res / b_norm,
    })
}
