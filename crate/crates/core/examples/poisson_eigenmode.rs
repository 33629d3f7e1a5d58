//! Zero-mean Neumann Poisson solves: the cosine eigenmode under refinement,
//! the `H^-1` seminorm and the discrete Poincare constant.

use std::f64::consts::PI;

use crossdiff::poisson::{cosine_mode_errors, hminus1_seminorm, poincare_ratio, DEFAULT_TOL};
use crossdiff::{Field, Grid};

fn main() {
    let rows = cosine_mode_errors(&[32, 64, 128, 256], 1.0, 1e-12).unwrap();
    println!("{:>5} {:>12} {:>8}", "n", "max error", "order");
    for (k, &(n, h, e)) in rows.iter().enumerate() {
        let order = if k > 0 {
            let (_, h0, e0) = rows[k - 1];
            format!("{:.3}", (e0 / e).ln() / (h0 / h).ln())
        } else {
            String::new()
        };
        println!("{n:>5} {e:>12.4e} {order:>8}");
    }

    let g = Grid::new_1d(256, 1.0).unwrap();
    let w = Field::from_fn(&g, |x, _| (PI * x).cos());
    let s = hminus1_seminorm(&g, &w, DEFAULT_TOL).unwrap();
    println!(
        "||cos(pi x)||_H^-1 = {s:.6}  (1/(pi sqrt 2) = {:.6})",
        1.0 / (PI * 2f64.sqrt())
    );

    for l in [1.0, 2.0] {
        let k = poincare_ratio(&Grid::new_1d(128, l).unwrap()).unwrap();
        println!(
            "Poincare constant, L = {l}: {k:.6}  (L^2/pi^2 = {:.6})",
            l * l / (PI * PI)
        );
    }
}
