//! Assembled-on-the-fly two-point flux operators.

use crate::grid::{FaceField, Grid};
use crate::linalg::LinearOperator;

/// `y = shift x - scale div(M grad x) + absorb x` with face mobilities `M`
/// and homogeneous Neumann boundaries. Symmetric; positive definite when
/// `shift > 0` or `absorb > 0` somewhere, semidefinite otherwise.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    grid: Grid,
    mobility: FaceField,
    shift: f64,
    scale: f64,
    absorb: Option<Vec<f64>>,
}

impl DiffusionOperator {
    /// Negative Neumann Laplacian `-lap`.
    pub fn neg_laplacian(grid: &Grid) -> Self {
        let mut m = FaceField::zeros(grid);
        let (nx, ny) = (grid.nx(), grid.ny());
        for j in 0..ny {
            for i in 1..nx {
                m.x[j * (nx + 1) + i] = 1.0;
            }
        }
        if grid.dim() == 2 {
            for j in 1..ny {
                for i in 0..nx {
                    m.y[j * nx + i] = 1.0;
                }
            }
        }
        DiffusionOperator {
            grid: *grid,
            mobility: m,
            shift: 0.0,
            scale: 1.0,
            absorb: None,
        }
    }

    /// `I - dt div(M grad .) + dt diag(absorb)`, one implicit Euler step.
    /// Boundary entries of `mobility` are ignored.
    pub fn implicit_step(mobility: FaceField, dt: f64, absorb: Option<Vec<f64>>) -> Self {
        let grid = *mobility.grid();
        DiffusionOperator {
            grid,
            mobility,
            shift: 1.0,
            scale: dt,
            absorb: absorb.map(|a| a.into_iter().map(|k| k * dt).collect()),
        }
    }

    /// `div(M grad x)` written into `out`.
    pub fn flux_divergence(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (hx2, hy2) = (g.spacing(0).powi(2), g.spacing(1).powi(2));
        let mx = &self.mobility.x;
        let my = &self.mobility.y;
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                let xc = x[c];
                let mut acc = 0.0;
                if i > 0 {
                    acc -= mx[j * (nx + 1) + i] * (xc - x[c - 1]);
                }
                if i + 1 < nx {
                    acc += mx[j * (nx + 1) + i + 1] * (x[c + 1] - xc);
                }
                let mut d = acc / hx2;
                if g.dim() == 2 {
                    let mut acc_y = 0.0;
                    if j > 0 {
                        acc_y -= my[j * nx + i] * (xc - x[c - nx]);
                    }
                    if j + 1 < ny {
                        acc_y += my[(j + 1) * nx + i] * (x[c + nx] - xc);
                    }
                    d += acc_y / hy2;
                }
                out[c] = d;
            }
        }
    }
}

impl LinearOperator for DiffusionOperator {
    fn size(&self) -> usize {
        self.grid.cells()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.flux_divergence(x, y);
        for (c, yc) in y.iter_mut().enumerate() {
            *yc = self.shift * x[c] - self.scale * *yc;
        }
        if let Some(a) = &self.absorb {
            for ((yc, xc), k) in y.iter_mut().zip(x).zip(a) {
                *yc += k * xc;
            }
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (hx2, hy2) = (g.spacing(0).powi(2), g.spacing(1).powi(2));
        let mut d = vec![self.shift; g.cells()];
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                let mut s = 0.0;
                if i > 0 {
                    s += self.mobility.x[j * (nx + 1) + i] / hx2;
                }
                if i + 1 < nx {
                    s += self.mobility.x[j * (nx + 1) + i + 1] / hx2;
                }
                if g.dim() == 2 {
                    if j > 0 {
                        s += self.mobility.y[j * nx + i] / hy2;
                    }
                    if j + 1 < ny {
                        s += self.mobility.y[(j + 1) * nx + i] / hy2;
                    }
                }
                d[c] += self.scale * s;
                if let Some(a) = &self.absorb {
                    d[c] += a[c];
                }
            }
        }
        Some(d)
    }
}
