//! Matrix-free conjugate gradients.

use crate::grid::dot;

/// Symmetric operator applied without assembling a matrix.
pub trait LinearOperator {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Diagonal entries, when cheaply available (Jacobi preconditioning).
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||b - A x|| <= tol ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Restrict iterates to the mean-zero subspace (Neumann kernel).
    pub project_mean: bool,
    pub preconditioner: Preconditioner,
}

impl CgOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        CgOptions {
            tol,
            max_iter,
            project_mean: false,
            preconditioner: Preconditioner::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

const MAX_STALLED_RESTARTS: usize = 3;

fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Solves `A x = b` starting from the contents of `x`.
///
/// The recursive residual is confirmed against the true residual before
/// returning; on disagreement the iteration restarts from the current
/// iterate, within the overall `max_iter` budget.
pub fn conjugate_gradient(op: &impl LinearOperator, b: &[f64], x: &mut [f64], opts: &CgOptions) -> CgOutcome {
    let n = op.size();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let mut rhs = b.to_vec();
    if opts.project_mean {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let b_norm = norm(&rhs);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let inv_diag: Option<Vec<f64>> = match opts.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => op
            .diagonal()
            .map(|d| d.iter().map(|&v| if v != 0.0 { 1.0 / v } else { 1.0 }).collect()),
    };
    let precondition = |r: &[f64], z: &mut [f64]| {
        match &inv_diag {
            Some(inv) => z.iter_mut().zip(r.iter().zip(inv)).for_each(|(z, (r, d))| *z = r * d),
            None => z.copy_from_slice(r),
        }
        if opts.project_mean {
            remove_mean(z);
        }
    };

    let target = opts.tol * b_norm;
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    let true_residual = |x: &[f64], r: &mut [f64], ap: &mut [f64]| {
        op.apply(x, ap);
        for i in 0..n {
            r[i] = rhs[i] - ap[i];
        }
        if opts.project_mean {
            remove_mean(r);
        }
        norm(r)
    };

    let mut res = true_residual(x, &mut r, &mut ap);
    let mut stalled_restarts = 0;
    loop {
        if res <= target {
            return CgOutcome {
                iterations,
                relative_residual: res / b_norm,
                converged: true,
            };
        }
        if iterations >= opts.max_iter {
            return CgOutcome {
                iterations,
                relative_residual: res / b_norm,
                converged: false,
            };
        }
        precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < opts.max_iter {
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if opts.project_mean {
                remove_mean(x);
                remove_mean(&mut r);
            }
            iterations += 1;
            if norm(&r) <= target {
                break;
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let previous = res;
        res = true_residual(x, &mut r, &mut ap);
        if res > target && res >= 0.5 * previous {
            stalled_restarts += 1;
            if stalled_restarts > MAX_STALLED_RESTARTS {
                // true residual stuck at rounding level
                return CgOutcome {
                    iterations,
                    relative_residual: res / b_norm,
                    converged: false,
                };
            }
        }
    }
}
