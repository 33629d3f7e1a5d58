use crate::coeffs::CoefficientModel;
use crate::exprs::{add, mul, sub, Expr, ExprError, Var};

/// Exact solution `(u*, v*)` in `x[, y], t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manufactured {
    pub u_star: Expr,
    pub v_star: Expr,
}

fn compose(e: &Expr, u: &Expr, v: &Expr) -> Expr {
    e.substitute(Var::U, u).substitute(Var::V, v)
}

/// Sources `(S1, S2)` that make `(u*, v*)` an exact solution:
///
/// ```text
/// S1 = d_t u* - div(A11 grad u* + A12 grad v*) - R1
/// S2 = d_t v* - div(A22 grad v*) - R2
/// ```
///
/// with the coefficients evaluated at `(u*, v*)`. Both `u*` and `v*` may only
/// use `x`, `y` and `t`.
pub fn mms_forcing(u_star: &Expr, v_star: &Expr, m: &CoefficientModel) -> Result<(Expr, Expr), ExprError> {
    for (e, name) in [(u_star, "u*"), (v_star, "v*")] {
        if e.depends_on(Var::U) || e.depends_on(Var::V) {
            return Err(ExprError::Domain {
                node: format!("{name} = {e}"),
                reason: "manufactured solutions may only use x, y, t".into(),
            });
        }
    }
    let a11 = compose(&m.a11_expr(), u_star, v_star);
    let a12 = compose(&m.a12, u_star, v_star);
    let a22 = compose(&m.a22, u_star, v_star);
    let r1 = compose(&m.r1_expr(), u_star, v_star);
    let r2 = compose(&m.r2_expr(), u_star, v_star);

    let mut s1 = sub(u_star.differentiate(Var::T), r1);
    let mut s2 = sub(v_star.differentiate(Var::T), r2);
    for axis in [Var::X, Var::Y] {
        let flux_u = add(
            mul(a11.clone(), u_star.differentiate(axis)),
            mul(a12.clone(), v_star.differentiate(axis)),
        );
        let flux_v = mul(a22.clone(), v_star.differentiate(axis));
        s1 = sub(s1, flux_u.differentiate(axis));
        s2 = sub(s2, flux_v.differentiate(axis));
    }
    Ok((s1, s2))
}

/// Refinement study against a manufactured solution on the unit-aspect box
/// `[0, length]^dim`, with `dt = t_end / ceil(t_end / (dt_factor h^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub model: CoefficientModel,
    pub solution: Manufactured,
    pub dim: usize,
    pub length: f64,
    /// Cells per axis, coarse to fine.
    pub levels: Vec<usize>,
    pub dt_factor: f64,
    pub t_end: f64,
    pub linear: super::LinearTolerances,
}

/// One refinement level; orders compare against the previous level.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub err_u: f64,
    pub err_v: f64,
    /// `log(e_prev / e) / log(h_prev / h)`.
    pub order_h_u: Option<f64>,
    pub order_h_v: Option<f64>,
    /// `log(e_prev / e) / log(dt_prev / dt)`.
    pub order_dt_u: Option<f64>,
    pub order_dt_v: Option<f64>,
}

pub const CONVERGENCE_HEADER: &str = "n,h,dt,err_u,err_v,order_h_u,order_h_v,order_dt_u,order_dt_v";

impl ConvergenceStudy {
    fn level(&self, n: usize) -> Result<(f64, f64, f64, f64), super::SolverError> {
        use crate::grid::Grid;
        let grid = if self.dim == 2 {
            Grid::new_2d(n, n, self.length, self.length)?
        } else {
            Grid::new_1d(n, self.length)?
        };
        let h = grid.spacing(0);
        let dt = self.t_end / (self.t_end / (self.dt_factor * h * h)).ceil();
        let mut cfg = super::SimConfig::manufactured(
            grid,
            self.model.clone(),
            self.solution.u_star.clone(),
            self.solution.v_star.clone(),
            dt,
            self.t_end,
        );
        cfg.output_every = usize::MAX;
        cfg.linear = self.linear;
        let mut sim = super::Simulation::new(&cfg)?;
        while !sim.is_finished() {
            sim.advance()?;
        }
        let (ue, ve) = sim.exact()?.expect("manufactured");
        let s = sim.state();
        Ok((h, dt, s.u.sub(&ue).l2_norm(), s.v.sub(&ve).l2_norm()))
    }

    /// Runs all levels (concurrently) and reports discrete `L2` errors at
    /// `t_end` with observed orders.
    pub fn run(&self) -> Result<Vec<ConvergenceRow>, super::SolverError> {
        use rayon::prelude::*;
        if self.levels.is_empty() || !(self.dt_factor > 0.0) || !(self.t_end > 0.0) {
            return Err(super::SolverError::InvalidConfig(
                "convergence study needs levels, dt_factor > 0 and t_end > 0".into(),
            ));
        }
        let raw = self
            .levels
            .par_iter()
            .map(|&n| self.level(n))
            .collect::<Result<Vec<_>, _>>()?;
        let order = |e0: f64, e1: f64, r: f64| (e0 / e1).ln() / r.ln();
        Ok(raw
            .iter()
            .enumerate()
            .map(|(k, &(h, dt, eu, ev))| {
                let prev = (k > 0).then(|| raw[k - 1]);
                ConvergenceRow {
                    n: self.levels[k],
                    h,
                    dt,
                    err_u: eu,
                    err_v: ev,
                    order_h_u: prev.map(|p| order(p.2, eu, p.0 / h)),
                    order_h_v: prev.map(|p| order(p.3, ev, p.0 / h)),
                    order_dt_u: prev.map(|p| order(p.2, eu, p.1 / dt)),
                    order_dt_v: prev.map(|p| order(p.3, ev, p.1 / dt)),
                }
            })
            .collect())
    }
}

/// Writes the convergence table; orders of the first row are left empty.
pub fn write_convergence_csv<W: std::io::Write>(rows: &[ConvergenceRow], mut out: W) -> std::io::Result<()> {
    let opt = |o: Option<f64>| o.map(|v| format!("{v:.6}")).unwrap_or_default();
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{}",
            r.n,
            r.h,
            r.dt,
            r.err_u,
            r.err_v,
            opt(r.order_h_u),
            opt(r.order_h_v),
            opt(r.order_dt_u),
            opt(r.order_dt_v)
        )?;
    }
    Ok(())
}
