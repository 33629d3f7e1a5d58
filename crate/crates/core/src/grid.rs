//! Uniform cell-centred Cartesian grids in one or two dimensions with
//! homogeneous Neumann (no-flux) boundary faces.
//!
//! Reductions run sequentially in row-major cell order (x fastest), so every
//! integral and norm is bit-reproducible.

use std::io::{self, Write};

use crate::exprs::{Bindings, Expr, ExprError, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid needs at least 2 cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("field has {got} values, grid has {expected} cells")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} in cell {cell}")]
    NonFinite { cell: usize, value: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Box domain `[0, L1] (x [0, L2])` split into `n1 (x n2)` equal cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    len: [f64; 2],
    h: [f64; 2],
}

impl Grid {
    pub fn new_1d(n: usize, length: f64) -> Result<Self, GridError> {
        Self::build(1, [n, 1], [length, 1.0])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        Self::build(2, [nx, ny], [lx, ly])
    }

    fn build(dim: usize, n: [usize; 2], len: [f64; 2]) -> Result<Self, GridError> {
        for axis in 0..dim {
            if n[axis] < 2 {
                return Err(GridError::TooFewCells(n[axis]));
            }
            if !(len[axis] > 0.0 && len[axis].is_finite()) {
                return Err(GridError::BadLength(len[axis]));
            }
        }
        let h = [len[0] / n[0] as f64, len[1] / n[1] as f64];
        Ok(Grid { dim, n, len, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    /// Cells along y; 1 for one-dimensional grids.
    pub fn ny(&self) -> usize {
        self.n[1]
    }

    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.len[axis]
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> f64 {
        if self.dim == 1 {
            self.h[0]
        } else {
            self.h[0].min(self.h[1])
        }
    }

    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.h[0]
        } else {
            self.h[0] * self.h[1]
        }
    }

    /// Measure of the domain.
    pub fn measure(&self) -> f64 {
        if self.dim == 1 {
            self.len[0]
        } else {
            self.len[0] * self.len[1]
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    /// Cell centre `(x, y)`; `y` is 0 on one-dimensional grids.
    pub fn center(&self, cell: usize) -> (f64, f64) {
        let i = cell % self.n[0];
        let j = cell / self.n[0];
        let x = (i as f64 + 0.5) * self.h[0];
        let y = if self.dim == 2 {
            (j as f64 + 0.5) * self.h[1]
        } else {
            0.0
        };
        (x, y)
    }

    /// Bindings for the spatial coordinates of `cell` at time `t`.
    pub fn bindings(&self, cell: usize, t: f64) -> Bindings {
        let (x, y) = self.center(cell);
        let mut b = Bindings::new().with(Var::X, x).with(Var::T, t);
        if self.dim == 2 {
            b.set(Var::Y, y);
        }
        b
    }

    /// Number of x-faces `(nx + 1) ny` and y-faces `nx (ny + 1)`; y-faces are
    /// empty in 1D.
    pub fn face_counts(&self) -> (usize, usize) {
        let fy = if self.dim == 2 { self.n[0] * (self.n[1] + 1) } else { 0 };
        ((self.n[0] + 1) * self.n[1], fy)
    }
}

/// One value per cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field {
            grid: *grid,
            data: vec![c; grid.cells()],
        }
    }

    pub fn from_vec(grid: &Grid, data: Vec<f64>) -> Result<Self, GridError> {
        if data.len() != grid.cells() {
            return Err(GridError::LengthMismatch {
                expected: grid.cells(),
                got: data.len(),
            });
        }
        if let Some((cell, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { cell, value });
        }
        Ok(Field { grid: *grid, data })
    }

    /// Samples `f(x, y)` at cell centres.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = (0..grid.cells())
            .map(|c| {
                let (x, y) = grid.center(c);
                f(x, y)
            })
            .collect();
        Field { grid: *grid, data }
    }

    /// Samples an expression in `(x[, y], t)` at cell centres.
    pub fn from_expr(grid: &Grid, e: &Expr, t: f64) -> Result<Self, GridError> {
        let data = (0..grid.cells())
            .map(|c| e.eval(&grid.bindings(c, t)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_vec(grid, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.data.len(), other.data.len(), "fields on different grids");
        Field {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.measure()
    }

    /// Volume-weighted inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        dot(&self.data, &other.data) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `sqrt(sum over faces of g^2 * facevol)` with `g` the face gradient.
    pub fn grad_l2_norm(&self) -> f64 {
        face_gradient(self).l2_norm_sq().sqrt()
    }

    /// Copy with the mean subtracted.
    pub fn minus_mean(&self) -> Field {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Writes `x[,y],value` rows in cell order with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        if self.grid.dim == 2 {
            writeln!(out, "x,y,value")?;
        } else {
            writeln!(out, "x,value")?;
        }
        for (c, v) in self.data.iter().enumerate() {
            let (x, y) = self.grid.center(c);
            if self.grid.dim == 2 {
                writeln!(out, "{x:.16e},{y:.16e},{v:.16e}")?;
            } else {
                writeln!(out, "{x:.16e},{v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Plain Euclidean dot product, summed in index order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Values living on cell faces. x-face `(i, j)` separates cells `i-1` and `i`
/// of row `j` and is stored at `j (nx + 1) + i`; y-face `(i, j)` separates
/// rows `j-1` and `j` and is stored at `j nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: Grid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        let (fx, fy) = grid.face_counts();
        FaceField {
            grid: *grid,
            x: vec![0.0; fx],
            y: vec![0.0; fy],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Fills interior faces with `f(left, right)` of the adjacent cell values;
    /// boundary faces stay zero.
    pub fn from_cell_pairs(field: &Field, f: impl Fn(f64, f64) -> f64) -> Self {
        let g = field.grid;
        let mut out = FaceField::zeros(&g);
        let (nx, ny) = (g.nx(), g.ny());
        let d = field.values();
        for j in 0..ny {
            for i in 1..nx {
                out.x[j * (nx + 1) + i] = f(d[g.index(i - 1, j)], d[g.index(i, j)]);
            }
        }
        if g.dim == 2 {
            for j in 1..ny {
                for i in 0..nx {
                    out.y[j * nx + i] = f(d[g.index(i, j - 1)], d[g.index(i, j)]);
                }
            }
        }
        out
    }

    /// Face-wise product.
    pub fn mul(&self, other: &FaceField) -> FaceField {
        FaceField {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a * b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.y).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum g^2 * facevol`, the face volume being one cell volume.
    pub fn l2_norm_sq(&self) -> f64 {
        (dot(&self.x, &self.x) + dot(&self.y, &self.y)) * self.grid.cell_volume()
    }

    /// Face-volume-weighted inner product.
    pub fn dot(&self, other: &FaceField) -> f64 {
        (dot(&self.x, &other.x) + dot(&self.y, &other.y)) * self.grid.cell_volume()
    }

    /// Face values averaged to cell centres per axis, `(gx, gy)`.
    pub fn cell_averages(&self) -> (Field, Field) {
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mut gx = Field::zeros(&g);
        let mut gy = Field::zeros(&g);
        for j in 0..ny {
            for i in 0..nx {
                let c = g.index(i, j);
                gx.data[c] = 0.5 * (self.x[j * (nx + 1) + i] + self.x[j * (nx + 1) + i + 1]);
                if g.dim == 2 {
                    gy.data[c] = 0.5 * (self.y[j * nx + i] + self.y[(j + 1) * nx + i]);
                }
            }
        }
        (gx, gy)
    }
}

/// Two-point gradient on interior faces, zero on boundary faces.
pub fn face_gradient(f: &Field) -> FaceField {
    let g = f.grid;
    let (hx, hy) = (g.h[0], g.h[1]);
    let mut out = FaceField::from_cell_pairs(f, |l, r| (r - l) / hx);
    if g.dim == 2 {
        let (nx, ny) = (g.nx(), g.ny());
        let d = f.values();
        for j in 1..ny {
            for i in 0..nx {
                out.y[j * nx + i] = (d[g.index(i, j)] - d[g.index(i, j - 1)]) / hy;
            }
        }
    }
    out
}

/// Cell-wise flux divergence `sum_axes (F_right - F_left) / h`.
pub fn divergence(flux: &FaceField) -> Field {
    let g = flux.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = Field::zeros(&g);
    for j in 0..ny {
        for i in 0..nx {
            let c = g.index(i, j);
            let mut d = (flux.x[j * (nx + 1) + i + 1] - flux.x[j * (nx + 1) + i]) / g.h[0];
            if g.dim == 2 {
                d += (flux.y[(j + 1) * nx + i] - flux.y[j * nx + i]) / g.h[1];
            }
            out.data[c] = d;
        }
    }
    out
}

/// Neumann Laplacian `div(grad f)`.
pub fn laplacian(f: &Field) -> Field {
    divergence(&face_gradient(f))
}
