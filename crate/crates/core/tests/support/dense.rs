use crossdiff::{Field, Grid};
use nalgebra::{DMatrix, DVector};

/// Zero-mean Neumann potential of `w` from a dense LU solve of the
/// two-point Laplacian with the first unknown pinned to zero.
pub fn dense_pinned_potential(grid: &Grid, w: &Field) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let n = grid.cells();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut couple = |p: usize, q: usize, c: f64| {
        a[(p, p)] += c;
        a[(p, q)] -= c;
    };
    let cx = 1.0 / grid.spacing(0).powi(2);
    for j in 0..ny {
        for i in 0..nx {
            let p = grid.index(i, j);
            if i > 0 {
                couple(p, grid.index(i - 1, j), cx);
            }
            if i + 1 < nx {
                couple(p, grid.index(i + 1, j), cx);
            }
            if grid.dim() == 2 {
                let cy = 1.0 / grid.spacing(1).powi(2);
                if j > 0 {
                    couple(p, grid.index(i, j - 1), cy);
                }
                if j + 1 < ny {
                    couple(p, grid.index(i, j + 1), cy);
                }
            }
        }
    }
    let mean = w.values().iter().sum::<f64>() / n as f64;
    let mut b = DVector::from_iterator(n, w.values().iter().map(|x| x - mean));
    for k in 0..n {
        a[(0, k)] = 0.0;
    }
    a[(0, 0)] = 1.0;
    b[0] = 0.0;
    let x = a.lu().solve(&b).expect("pinned Neumann matrix is regular");
    let m = x.mean();
    x.iter().map(|v| v - m).collect()
}
