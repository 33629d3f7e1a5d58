//! Zero-mean Neumann Poisson problem
//!
//! ```text
//! -lap psi = w - mean(w)  in the box,   grad psi . n = 0,   sum psi = 0
//! ```
//!
//! solved by conjugate gradients on the Neumann Laplacian restricted to the
//! mean-zero subspace, and the `H^-1`-type seminorm `||grad psi||` built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field, Grid};
use crate::linalg::{conjugate_gradient, CgOptions, LinearOperator, Preconditioner};
use crate::stencil::DiffusionOperator;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    /// Zero-mean potential.
    pub psi: Field,
    /// Relative residual `||lap psi + (w - mean w)|| / ||w - mean w||`.
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoissonError {
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("CG did not reach relative residual {tol} in {iterations} iterations (best {residual:.3e})")]
    NotConverged {
        tol: f64,
        iterations: usize,
        residual: f64,
        best: Box<PoissonSolution>,
    },
    #[error("duality check failed: ||grad psi||^2 = {energy:.6e} but <w - mean w, psi> = {pairing:.6e}")]
    DualityMismatch { energy: f64, pairing: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonOptions {
    pub tol: f64,
    /// Defaults to ten times the cell count.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        PoissonOptions {
            tol: DEFAULT_TOL,
            max_iter: None,
            preconditioner: Preconditioner::None,
        }
    }
}

impl PoissonOptions {
    pub fn with_tol(tol: f64) -> Self {
        PoissonOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Solves from a zero initial guess.
pub fn solve_neumann_zero_mean(grid: &Grid, w: &Field, opts: &PoissonOptions) -> Result<PoissonSolution, PoissonError> {
    solve_neumann_zero_mean_from(grid, w, None, opts)
}

/// Solves starting from `guess` (projected to zero mean) when given.
pub fn solve_neumann_zero_mean_from(
    grid: &Grid,
    w: &Field,
    guess: Option<&Field>,
    opts: &PoissonOptions,
) -> Result<PoissonSolution, PoissonError> {
    if !(opts.tol > 0.0) {
        return Err(PoissonError::BadTolerance(opts.tol));
    }
    let op = DiffusionOperator::neg_laplacian(grid);
    let rhs = w.minus_mean();
    let mut x = match guess {
        Some(g) => g.values().to_vec(),
        None => vec![0.0; grid.cells()],
    };
    let cg = CgOptions {
        tol: opts.tol,
        max_iter: opts.max_iter.unwrap_or(10 * grid.cells()),
        project_mean: true,
        preconditioner: opts.preconditioner,
    };
    let out = conjugate_gradient(&op, rhs.values(), &mut x, &cg);
    let mut psi = Field::from_vec(grid, x).expect("CG iterate is finite");
    let m = psi.mean();
    psi.values_mut().iter_mut().for_each(|v| *v -= m);
    let solution = PoissonSolution {
        psi,
        residual_norm: out.relative_residual,
        iterations: out.iterations,
    };
    if out.converged {
        Ok(solution)
    } else {
        Err(PoissonError::NotConverged {
            tol: opts.tol,
            iterations: out.iterations,
            residual: out.relative_residual,
            best: Box::new(solution),
        })
    }
}

/// `||grad psi||_2` for the zero-mean Neumann potential of `w`, cross-checked
/// against the duality pairing `sqrt(<w - mean w, psi>)`.
pub fn hminus1_seminorm(grid: &Grid, w: &Field, tol: f64) -> Result<f64, PoissonError> {
    let sol = solve_neumann_zero_mean(grid, w, &PoissonOptions::with_tol(tol))?;
    let energy = sol.psi.grad_l2_norm().powi(2);
    let pairing = w.minus_mean().dot(&sol.psi);
    // the two differ by <residual, psi>, bounded by tol times the condition
    // number of the Laplacian
    let slack = (tol * 1e4).max(1e-9);
    if (energy - pairing).abs() > slack * energy.max(pairing.abs()) + f64::MIN_POSITIVE {
        return Err(PoissonError::DualityMismatch { energy, pairing });
    }
    Ok(energy.sqrt())
}

/// Discrete Poincaré constant `K_h = max ||psi||^2 / ||grad psi||^2` over
/// mean-zero fields, by power iteration on the inverse Neumann Laplacian.
/// Converges to `1 / lambda_1` of the grid.
pub fn poincare_ratio(grid: &Grid) -> Result<f64, PoissonError> {
    let op = DiffusionOperator::neg_laplacian(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let mut probe = Field::from_fn(grid, |x, y| x + 0.5 * y);
    probe
        .values_mut()
        .iter_mut()
        .for_each(|v| *v += 0.1 * rng.gen_range(-1.0..1.0));
    let mut psi = probe.minus_mean();
    let opts = PoissonOptions::with_tol(1e-12);
    let mut estimate = 0.0;
    let mut ap = vec![0.0; grid.cells()];
    for _ in 0..200 {
        let norm = psi.l2_norm();
        let unit = psi.map(|v| v / norm);
        let next = solve_neumann_zero_mean_from(grid, &unit, Some(&unit), &opts)?.psi;
        op.apply(next.values(), &mut ap);
        let energy = crate::grid::dot(&ap, next.values()) * grid.cell_volume();
        let k = next.dot(&next) / energy;
        let converged = (k - estimate).abs() <= 1e-12 * k;
        estimate = k;
        psi = next;
        if converged {
            break;
        }
    }
    Ok(estimate)
}

/// Max-norm error of the zero-mean Neumann solve for `w = cos(pi x / L)`
/// against `psi = (L/pi)^2 cos(pi x / L)`, one row `(n, h, error)` per level.
pub fn cosine_mode_errors(levels: &[usize], length: f64, tol: f64) -> Result<Vec<(usize, f64, f64)>, PoissonError> {
    let k = std::f64::consts::PI / length;
    levels
        .iter()
        .map(|&n| {
            let g = Grid::new_1d(n, length).expect("at least two cells");
            let w = Field::from_fn(&g, |x, _| (k * x).cos());
            let sol = solve_neumann_zero_mean(&g, &w, &PoissonOptions::with_tol(tol))?;
            let exact = Field::from_fn(&g, |x, _| (k * x).cos() / (k * k));
            Ok((n, g.spacing(0), sol.psi.sub(&exact).max_abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian;
    use std::f64::consts::PI;

    #[test]
    fn constant_source_gives_zero_potential() {
        let g = Grid::new_2d(8, 5, 1.0, 2.0).unwrap();
        let sol = solve_neumann_zero_mean(&g, &Field::constant(&g, 4.2), &PoissonOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.psi.max_abs(), 0.0);
    }

    #[test]
    fn residual_and_mean_contract() {
        let g = Grid::new_2d(16, 12, 1.0, 0.75).unwrap();
        let w = Field::from_fn(&g, |x, y| (x * 7.0).sin() * y + x * x);
        let tol = 1e-10;
        let sol = solve_neumann_zero_mean(&g, &w, &PoissonOptions::with_tol(tol)).unwrap();
        assert!(sol.psi.mean().abs() <= 1e-12);
        let b = w.minus_mean();
        let res = laplacian(&sol.psi).zip_map(&b, |a, b| a + b);
        assert!(res.l2_norm() <= tol * b.l2_norm() * (1.0 + 1e-6));
        assert!(sol.residual_norm <= tol);
    }

    #[test]
    fn eigenfunction_in_one_dimension() {
        let g = Grid::new_1d(256, 1.0).unwrap();
        let w = Field::from_fn(&g, |x, _| (PI * x).cos());
        let sol = solve_neumann_zero_mean(&g, &w, &PoissonOptions::with_tol(1e-12)).unwrap();
        let exact = Field::from_fn(&g, |x, _| (PI * x).cos() / (PI * PI));
        assert!(sol.psi.sub(&exact).max_abs() <= 5e-4);
    }

    #[test]
    fn seminorm_of_cosine_mode() {
        let g = Grid::new_1d(256, 1.0).unwrap();
        let w = Field::from_fn(&g, |x, _| (PI * x).cos());
        let s = hminus1_seminorm(&g, &w, 1e-12).unwrap();
        assert!((s - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-3);
        assert_eq!(hminus1_seminorm(&g, &Field::constant(&g, 1.0), 1e-10).unwrap(), 0.0);
        let s2 = hminus1_seminorm(&g, &w.map(|v| 2.0 * v), 1e-12).unwrap();
        assert!((s2 - 2.0 * s).abs() <= 1e-10);
    }

    #[test]
    fn duality_identity() {
        let g = Grid::new_2d(20, 10, 2.0, 1.0).unwrap();
        let w = Field::from_fn(&g, |x, y| (x - 0.3).exp() * (2.0 * y).cos());
        let tol = 1e-10;
        let sol = solve_neumann_zero_mean(&g, &w, &PoissonOptions::with_tol(tol)).unwrap();
        let energy = sol.psi.grad_l2_norm().powi(2);
        let pairing = w.minus_mean().dot(&sol.psi);
        assert!((energy - pairing).abs() <= 10.0 * tol * energy);
    }

    #[test]
    fn jacobi_preconditioning_agrees() {
        let g = Grid::new_2d(12, 12, 1.0, 1.0).unwrap();
        let w = Field::from_fn(&g, |x, y| x * y * y);
        let plain = solve_neumann_zero_mean(&g, &w, &PoissonOptions::with_tol(1e-12)).unwrap();
        let jac = solve_neumann_zero_mean(
            &g,
            &w,
            &PoissonOptions {
                tol: 1e-12,
                max_iter: None,
                preconditioner: Preconditioner::Jacobi,
            },
        )
        .unwrap();
        assert!(plain.psi.sub(&jac.psi).max_abs() < 1e-10);
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let w = Field::from_fn(&g, |x, _| x * x * x);
        let err = solve_neumann_zero_mean(
            &g,
            &w,
            &PoissonOptions {
                tol: 1e-12,
                max_iter: Some(3),
                preconditioner: Preconditioner::None,
            },
        )
        .unwrap_err();
        match err {
            PoissonError::NotConverged { iterations, best, .. } => {
                assert_eq!(iterations, 3);
                assert_eq!(best.psi.len(), 64);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            solve_neumann_zero_mean(&g, &w, &PoissonOptions::with_tol(0.0)),
            Err(PoissonError::BadTolerance(_))
        ));
    }

    #[test]
    fn poincare_constant_one_dimension() {
        let k = poincare_ratio(&Grid::new_1d(128, 1.0).unwrap()).unwrap();
        assert!((k - 1.0 / (PI * PI)).abs() <= 0.02 / (PI * PI));
        let k2 = poincare_ratio(&Grid::new_1d(128, 2.0).unwrap()).unwrap();
        assert!((k2 / k - 4.0).abs() <= 0.08);
    }
}
