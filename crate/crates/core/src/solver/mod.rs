//! Time integration of the triangular system.
//!
//! Each step first advances `v` (its equation has no `grad u` term), then `u`
//! with the new `v`:
//!
//! * `v`: implicit Euler in the diffusion, face mobility the arithmetic mean
//!   of cell values `A22(u^n, v^n)`. Where the linear reaction part is
//!   absorbing (`q2(v^n) <= 0`) it enters the diagonal as
//!   `u^n |q2(v^n)| / v^n`, keeping `v` positive; everything else is explicit.
//! * `u`: linearly implicit with lagged face mobility
//!   `p(v_face) u_face^alpha` (arithmetic face means, `v` at the new level);
//!   cross-diffusion `div(A12 grad v)` and `R1(u^n, v^{n+1})` explicit;
//!   negative values are clipped and the clipped mass is booked.
//!
//! After each linear solve the new value is rebuilt from face fluxes of the
//! solver iterate, `w = rhs + dt div(M grad w_cg)`, so total mass changes by
//! reactions (and clipping) only, independent of the solver tolerance.

mod diagnostics;
mod mms;

use crate::coeffs::CoefficientModel;
use crate::exprs::{Bindings, Expr, ExprError, Var};
use crate::grid::{divergence, face_gradient, FaceField, Field, Grid, GridError};
use crate::linalg::{conjugate_gradient, CgOptions};
use crate::stencil::DiffusionOperator;

pub use diagnostics::{f_energy, write_diagnostics_csv, DiagnosticRecord, EnergyParams, DIAGNOSTICS_HEADER};
pub use mms::{mms_forcing, write_convergence_csv, ConvergenceRow, ConvergenceStudy, Manufactured, CONVERGENCE_HEADER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("linear solve for {equation} failed: residual {residual:.3e} after {iterations} iterations")]
    LinearSolve {
        equation: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("positivity lost, reduce dt (v = {value:.3e} in cell {cell})")]
    PositivityLost { cell: usize, value: f64 },
    #[error("positivity budget exceeded: clipped mass {clipped:.3e} > {budget:.3e}")]
    PositivityBudget { clipped: f64, budget: f64 },
    #[error("step {step} (t = {t}): {source}")]
    AtStep {
        step: usize,
        t: f64,
        source: Box<SolverError>,
    },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Solution at one time level. `u >= 0`, `v > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTolerances {
    /// Relative residual target for the implicit steps.
    pub tol: f64,
    /// Defaults to ten times the cell count.
    pub max_iter: Option<usize>,
}

impl Default for LinearTolerances {
    fn default() -> Self {
        LinearTolerances {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl LinearTolerances {
    fn cg(&self, grid: &Grid) -> CgOptions {
        CgOptions::new(self.tol, self.max_iter.unwrap_or(10 * grid.cells()))
    }
}

/// Clipped mass allowed per step, relative to the mass of `u^n`.
pub const DEFAULT_CLIP_BUDGET: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub model: CoefficientModel,
    pub dt: f64,
    pub t_end: f64,
    /// Initial data as expressions in `x[, y]`.
    pub u0: Expr,
    pub v0: Expr,
    /// Manufactured solution; its residual is added as a source.
    pub manufactured: Option<Manufactured>,
    /// Record a snapshot every this many steps (1 = dense). The final time
    /// is always recorded.
    pub output_every: usize,
    pub linear: LinearTolerances,
    pub energy: Option<EnergyParams>,
    pub clip_budget: f64,
}

impl SimConfig {
    pub fn new(grid: Grid, model: CoefficientModel, u0: Expr, v0: Expr, dt: f64, t_end: f64) -> Self {
        SimConfig {
            grid,
            model,
            dt,
            t_end,
            u0,
            v0,
            manufactured: None,
            output_every: 1,
            linear: LinearTolerances::default(),
            energy: None,
            clip_budget: DEFAULT_CLIP_BUDGET,
        }
    }

    /// Configuration whose exact solution is `(u*, v*)`; initial data are
    /// `u*, v*` at `t = 0`.
    pub fn manufactured(grid: Grid, model: CoefficientModel, u_star: Expr, v_star: Expr, dt: f64, t_end: f64) -> Self {
        let zero = Expr::Const(0.0);
        let u0 = u_star.substitute(Var::T, &zero);
        let v0 = v_star.substitute(Var::T, &zero);
        let mut cfg = SimConfig::new(grid, model, u0, v0, dt, t_end);
        cfg.manufactured = Some(Manufactured { u_star, v_star });
        cfg
    }

    pub fn with_output_every(mut self, every: usize) -> Self {
        self.output_every = every;
        self
    }

    /// Checks the configuration and samples the initial data. Returns
    /// advisory warnings (currently the explicit cross-term step guidance
    /// `dt <= h^2 / max |A12 grad v|`).
    pub fn validate(&self) -> Result<Vec<String>, SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt) {
            return bad(format!("t_end = {} must be at least dt = {}", self.t_end, self.dt));
        }
        if self.output_every == 0 {
            return bad("output cadence must be at least 1 step".into());
        }
        if !(self.linear.tol > 0.0) {
            return bad(format!("linear tolerance must be positive, got {}", self.linear.tol));
        }
        self.model
            .check_structure()
            .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
        for (name, e) in [("u0", &self.u0), ("v0", &self.v0)] {
            if e.depends_on(Var::U) || e.depends_on(Var::V) {
                return bad(format!("{name} may only depend on x, y, t"));
            }
        }
        let u0 = Field::from_expr(&self.grid, &self.u0, 0.0)?;
        let v0 = Field::from_expr(&self.grid, &self.v0, 0.0)?;
        if u0.min() < 0.0 {
            return bad(format!("u0 must be non-negative, min {}", u0.min()));
        }
        if u0.max() == 0.0 {
            return bad("u0 must not vanish identically".into());
        }
        if v0.min() <= 0.0 {
            return bad(format!("v0 must be positive, min {}", v0.min()));
        }
        let mut warnings = Vec::new();
        let state = SimState { t: 0.0, u: u0, v: v0 };
        let cross = cross_flux(&state.u, &state.v, &self.model)?.max_abs();
        let h = self.grid.min_spacing();
        if cross > 0.0 && self.dt > h * h / cross {
            warnings.push(format!(
                "dt = {} exceeds the explicit cross-diffusion guidance h^2/max|A12 grad v| = {:.3e}",
                self.dt,
                h * h / cross
            ));
        }
        Ok(warnings)
    }

    pub fn initial_state(&self) -> Result<SimState, SolverError> {
        Ok(SimState {
            t: 0.0,
            u: Field::from_expr(&self.grid, &self.u0, 0.0)?,
            v: Field::from_expr(&self.grid, &self.v0, 0.0)?,
        })
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn time_at(&self, step: usize) -> f64 {
        if step >= self.step_count() {
            self.t_end
        } else {
            step as f64 * self.dt
        }
    }
}

fn eval_cells(f: impl Fn(usize) -> Result<f64, ExprError>, n: usize) -> Result<Vec<f64>, ExprError> {
    (0..n).map(f).collect()
}

fn face_mean(cell: &Field) -> FaceField {
    FaceField::from_cell_pairs(cell, |a, b| 0.5 * (a + b))
}

/// `A12(u, v) grad v` on faces, `A12` averaged arithmetically from cells.
fn cross_flux(u: &Field, v: &Field, m: &CoefficientModel) -> Result<FaceField, ExprError> {
    let g = u.grid();
    let a12 = eval_cells(|c| m.a12.eval_uv(u.values()[c], v.values()[c]), g.cells())?;
    let a12 = Field::from_vec(g, a12).expect("finite");
    Ok(face_mean(&a12).mul(&face_gradient(v)))
}

fn solve_conservative(
    op: &DiffusionOperator,
    rhs: &[f64],
    guess: &[f64],
    dt: f64,
    absorb: Option<&[f64]>,
    opts: &CgOptions,
    equation: &'static str,
) -> Result<Vec<f64>, SolverError> {
    let mut x = guess.to_vec();
    let out = conjugate_gradient(op, rhs, &mut x, opts);
    if !out.converged {
        return Err(SolverError::LinearSolve {
            equation,
            iterations: out.iterations,
            residual: out.relative_residual,
        });
    }
    let mut div = vec![0.0; x.len()];
    op.flux_divergence(&x, &mut div);
    let mut w: Vec<f64> = rhs.iter().zip(&div).map(|(r, d)| r + dt * d).collect();
    if let Some(k) = absorb {
        for ((wc, kc), xc) in w.iter_mut().zip(k).zip(&x) {
            *wc -= dt * kc * xc;
        }
    }
    Ok(w)
}

/// Advances `v` by one step using `(u^n, v^n)` from `s`. `source` is an
/// optional explicit forcing at the new time level.
pub fn step_v(
    s: &SimState,
    m: &CoefficientModel,
    dt: f64,
    tol: &LinearTolerances,
    source: Option<&Field>,
) -> Result<Field, SolverError> {
    let g = *s.v.grid();
    let (u, v) = (s.u.values(), s.v.values());
    let a22 = Field::from_vec(&g, eval_cells(|c| m.a22.eval_uv(u[c], v[c]), g.cells())?)?;
    let mut rhs = v.to_vec();
    let mut absorb = vec![0.0; g.cells()];
    let mut any_absorb = false;
    for c in 0..g.cells() {
        let q2 = m.r2_linear.eval_uv(u[c], v[c])?;
        let tilde = m.r2_tilde.eval_uv(u[c], v[c])?;
        if q2 <= 0.0 {
            absorb[c] = u[c] * (-q2) / v[c];
            any_absorb |= absorb[c] != 0.0;
            rhs[c] += dt * tilde;
        } else {
            rhs[c] += dt * (u[c] * q2 + tilde);
        }
        if let Some(f) = source {
            rhs[c] += dt * f.values()[c];
        }
    }
    let absorb = any_absorb.then_some(absorb);
    let op = DiffusionOperator::implicit_step(face_mean(&a22), dt, absorb.clone());
    let w = solve_conservative(&op, &rhs, v, dt, absorb.as_deref(), &tol.cg(&g), "v")?;
    if let Some((cell, &value)) = w.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(SolverError::PositivityLost { cell, value });
    }
    Ok(Field::from_vec(&g, w)?)
}

/// Result of one `u` update.
#[derive(Debug, Clone, PartialEq)]
pub struct UStep {
    pub u: Field,
    /// Mass added by clipping negative values to zero.
    pub clipped: f64,
    /// `dt * int R1(u^n, v^{n+1})`.
    pub reaction: f64,
    /// `dt * int source`.
    pub source: f64,
}

/// Advances `u` by one step from `s.u` given the already advanced `v_new`.
///
/// Fails when the mass clipped exceeds `clip_budget * int u^n`.
pub fn step_u(
    s: &SimState,
    v_new: &Field,
    m: &CoefficientModel,
    dt: f64,
    tol: &LinearTolerances,
    source: Option<&Field>,
    clip_budget: f64,
) -> Result<UStep, SolverError> {
    let g = *s.u.grid();
    let (u, v) = (s.u.values(), v_new.values());
    let u_face = face_mean(&s.u);
    let v_face = face_mean(v_new);
    let mut mobility = FaceField::zeros(&g);
    for (k, (uf, vf)) in u_face.x.iter().zip(&v_face.x).enumerate() {
        mobility.x[k] = m.p.eval_uv(*uf, *vf)? * crate::exprs::power(*uf, m.alpha);
    }
    for (k, (uf, vf)) in u_face.y.iter().zip(&v_face.y).enumerate() {
        mobility.y[k] = m.p.eval_uv(*uf, *vf)? * crate::exprs::power(*uf, m.alpha);
    }
    let cross = divergence(&cross_flux(&s.u, v_new, m)?);
    let vol = g.cell_volume();
    let mut rhs = u.to_vec();
    let mut reaction = 0.0;
    let mut source_mass = 0.0;
    for c in 0..g.cells() {
        let r1 = m.r1(u[c], v[c])?;
        reaction += r1;
        rhs[c] += dt * (cross.values()[c] + r1);
        if let Some(f) = source {
            rhs[c] += dt * f.values()[c];
            source_mass += f.values()[c];
        }
    }
    let op = DiffusionOperator::implicit_step(mobility, dt, None);
    let mut w = solve_conservative(&op, &rhs, u, dt, None, &tol.cg(&g), "u")?;
    let mut clipped = 0.0;
    for x in w.iter_mut() {
        if *x < 0.0 {
            clipped -= *x;
            *x = 0.0;
        }
    }
    clipped *= vol;
    let budget = clip_budget * s.u.integral();
    if clipped > budget {
        return Err(SolverError::PositivityBudget { clipped, budget });
    }
    Ok(UStep {
        u: Field::from_vec(&g, w)?,
        clipped,
        reaction: dt * reaction * vol,
        source: dt * source_mass * vol,
    })
}

/// Running mass balance of `u`:
/// `int u(t) = initial + reaction + source + clipped` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MassLedger {
    pub initial: f64,
    pub reaction: f64,
    pub source: f64,
    pub clipped: f64,
}

impl MassLedger {
    pub fn expected_mass(&self) -> f64 {
        self.initial + self.reaction + self.source + self.clipped
    }
}

/// A running simulation that can be advanced step by step.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    sources: Option<(Expr, Expr)>,
    state: SimState,
    step: usize,
    ledger: MassLedger,
    cum_grad_u_sq: f64,
}

impl Simulation {
    /// Validates `cfg` and starts from its initial data.
    pub fn new(cfg: &SimConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let state = cfg.initial_state()?;
        Self::start(cfg, state)
    }

    /// Starts from explicit initial fields (used for perturbed pairs).
    pub fn with_initial(cfg: &SimConfig, u0: Field, v0: Field) -> Result<Self, SolverError> {
        cfg.validate()?;
        if u0.min() < 0.0 || v0.min() <= 0.0 {
            return Err(SolverError::InvalidConfig(
                "initial data must satisfy u >= 0 and v > 0".into(),
            ));
        }
        Self::start(cfg, SimState { t: 0.0, u: u0, v: v0 })
    }

    fn start(cfg: &SimConfig, state: SimState) -> Result<Self, SolverError> {
        let sources = match &cfg.manufactured {
            Some(mf) => Some(mms_forcing(&mf.u_star, &mf.v_star, &cfg.model)?),
            None => None,
        };
        Ok(Simulation {
            cfg: cfg.clone(),
            sources,
            ledger: MassLedger {
                initial: state.u.integral(),
                ..Default::default()
            },
            state,
            step: 0,
            cum_grad_u_sq: 0.0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn ledger(&self) -> &MassLedger {
        &self.ledger
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.cfg.step_count()
    }

    /// Whether the current step index is an output tick.
    pub fn is_output_tick(&self) -> bool {
        self.step.is_multiple_of(self.cfg.output_every) || self.is_finished()
    }

    /// Advances one time step.
    pub fn advance(&mut self) -> Result<(), SolverError> {
        let t_next = self.cfg.time_at(self.step + 1);
        let dt = t_next - self.state.t;
        self.advance_by(dt, t_next).map_err(|e| SolverError::AtStep {
            step: self.step + 1,
            t: t_next,
            source: Box::new(e),
        })
    }

    fn advance_by(&mut self, dt: f64, t_next: f64) -> Result<(), SolverError> {
        let g = self.cfg.grid;
        let (s1, s2) = match &self.sources {
            Some((e1, e2)) => (
                Some(Field::from_expr(&g, e1, t_next)?),
                Some(Field::from_expr(&g, e2, t_next)?),
            ),
            None => (None, None),
        };
        let m = &self.cfg.model;
        let v_new = step_v(&self.state, m, dt, &self.cfg.linear, s2.as_ref())?;
        let up = step_u(
            &self.state,
            &v_new,
            m,
            dt,
            &self.cfg.linear,
            s1.as_ref(),
            self.cfg.clip_budget,
        )?;
        self.ledger.reaction += up.reaction;
        self.ledger.source += up.source;
        self.ledger.clipped += up.clipped;
        self.cum_grad_u_sq += dt * up.u.grad_l2_norm().powi(2);
        self.state = SimState {
            t: t_next,
            u: up.u,
            v: v_new,
        };
        self.step += 1;
        Ok(())
    }

    pub fn diagnostics(&self) -> DiagnosticRecord {
        DiagnosticRecord::of(&self.state, self.cum_grad_u_sq, self.ledger.clipped, self.cfg.energy)
    }

    /// Manufactured solution `(u*, v*)` at the current time, if configured.
    pub fn exact(&self) -> Result<Option<(Field, Field)>, SolverError> {
        match &self.cfg.manufactured {
            Some(mf) => Ok(Some((
                Field::from_expr(&self.cfg.grid, &mf.u_star, self.state.t)?,
                Field::from_expr(&self.cfg.grid, &mf.v_star, self.state.t)?,
            ))),
            None => Ok(None),
        }
    }
}

/// Output of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<SimState>,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub ledger: MassLedger,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimState {
        self.snapshots.last().expect("at least the initial snapshot")
    }
}

/// Runs from `t = 0` to `t_end` with fixed `dt` (last step shortened).
pub fn run(cfg: &SimConfig) -> Result<Trajectory, SolverError> {
    let warnings = cfg.validate()?;
    let mut sim = Simulation::new(cfg)?;
    let mut snapshots = vec![sim.state().clone()];
    let mut diagnostics = vec![sim.diagnostics()];
    while !sim.is_finished() {
        sim.advance()?;
        if sim.is_output_tick() {
            snapshots.push(sim.state().clone());
            diagnostics.push(sim.diagnostics());
        }
    }
    Ok(Trajectory {
        snapshots,
        diagnostics,
        ledger: *sim.ledger(),
        warnings,
    })
}

/// `A11 = p(v) u^alpha` evaluated at `(u, v)` bindings; used by the
/// stability harness for the coercivity constant.
pub fn min_mobility_factor(m: &CoefficientModel, v: &Field) -> Result<f64, ExprError> {
    let mut min = f64::INFINITY;
    for &vc in v.values() {
        min = min.min(m.p.eval(&Bindings::new().with(Var::V, vc))?);
    }
    Ok(min)
}

#[cfg(test)]
mod tests;
