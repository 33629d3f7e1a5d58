//! Paired runs from perturbed initial data and the `H^-1` stability
//! functional
//!
//! ```text
//! E(t) = (int du)^2 + ||grad dpsi||^2 + ||dv||^2,   -lap dpsi = du - mean(du)
//! ```
//!
//! with `du = u1 - u2`, `dv = v1 - v2`, along with the dissipation
//! `D(t) = int (u1^{1+alpha} - u2^{1+alpha})(u1 - u2)`, empirical growth
//! constants and a discrete check of
//! `1/2 ||grad dpsi(t)||^2 - 1/2 ||grad dpsi(0)||^2 = int <d_s du, dpsi> ds`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{dissipation_density, CoefficientModel};
use crate::exprs::{add, mul, Expr};
use crate::grid::{Field, Grid};
use crate::poisson::{solve_neumann_zero_mean_from, PoissonError, PoissonOptions};
use crate::solver::{min_mobility_factor, SimConfig, Simulation, SolverError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilityError {
    #[error("trajectory {which} failed: {source}")]
    Trajectory { which: u8, source: SolverError },
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error("energy identity needs dense output (every step), cadence is {cadence}")]
    NotDense { cadence: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOptions {
    /// Relative tolerance of the per-tick Poisson solve for `dpsi`.
    pub poisson_tol: f64,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            poisson_tol: crate::poisson::DEFAULT_TOL,
        }
    }
}

/// One output tick of a paired run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRow {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub comp_mass: f64,
    pub comp_hm1: f64,
    pub comp_v: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "cumD")]
    pub cum_d: f64,
}

impl StabilityRow {
    fn new(t: f64, comp_mass: f64, comp_hm1: f64, comp_v: f64, d: f64, cum_d: f64) -> Self {
        StabilityRow {
            t,
            e: comp_mass + comp_hm1 + comp_v,
            comp_mass,
            comp_hm1,
            comp_v,
            d,
            cum_d,
        }
    }
}

/// Discrete energy identity: `lhs = 1/2 (||grad dpsi_N||^2 - ||grad dpsi_0||^2)`
/// against the trapezoidal pairing `rhs = sum <du^{k+1} - du^k, (dpsi^k + dpsi^{k+1})/2>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl EnergyIdentity {
    /// Whether `residual <= tol (1 + |lhs|)`.
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol * (1.0 + self.lhs.abs())
    }
}

struct IdentityAccumulator {
    first: f64,
    last: f64,
    pairing: f64,
    prev: Option<(Field, Field)>,
}

impl IdentityAccumulator {
    fn new() -> Self {
        IdentityAccumulator {
            first: 0.0,
            last: 0.0,
            pairing: 0.0,
            prev: None,
        }
    }

    fn push(&mut self, du: &Field, dpsi: &Field) {
        let energy = dpsi.grad_l2_norm().powi(2);
        match &self.prev {
            None => self.first = energy,
            Some((du0, psi0)) => {
                let incr = du.sub(du0);
                let mid = psi0.zip_map(dpsi, |a, b| 0.5 * (a + b));
                self.pairing += incr.dot(&mid);
            }
        }
        self.last = energy;
        self.prev = Some((du.clone(), dpsi.clone()));
    }

    fn finish(&self) -> EnergyIdentity {
        let lhs = 0.5 * (self.last - self.first);
        EnergyIdentity {
            lhs,
            rhs: self.pairing,
            residual: (lhs - self.pairing).abs(),
        }
    }
}

/// Evaluates the energy identity on a sequence of `du` snapshots and their
/// zero-mean potentials taken at every step boundary (`cadence == 1`).
pub fn energy_identity_check(du: &[Field], dpsi: &[Field], cadence: usize) -> Result<EnergyIdentity, StabilityError> {
    if cadence != 1 {
        return Err(StabilityError::NotDense { cadence });
    }
    if du.len() != dpsi.len() || du.is_empty() {
        return Err(StabilityError::InvalidInput(format!(
            "need matching non-empty sequences, got {} and {}",
            du.len(),
            dpsi.len()
        )));
    }
    let mut acc = IdentityAccumulator::new();
    for (a, p) in du.iter().zip(dpsi) {
        acc.push(a, p);
    }
    Ok(acc.finish())
}

/// Result of a paired run.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub e0: f64,
    pub sup_e: f64,
    /// `E` at the final time.
    pub e_final: f64,
    /// `sup E / E(0)`; zero when both vanish.
    pub c_hat: f64,
    /// Least-squares slope of `ln E` over ticks with `E > 1e-2 E(0)`.
    pub lambda_hat: Option<f64>,
    /// Present only for dense output.
    pub energy_identity: Option<EnergyIdentity>,
    /// `min p(v)` over both trajectories and all steps.
    pub min_p: f64,
    pub alpha: f64,
}

impl StabilityReport {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn energy(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.e).collect()
    }

    /// Energy identity residual, or an error when the run was not dense.
    pub fn energy_identity_residual(&self, cadence: usize) -> Result<f64, StabilityError> {
        self.energy_identity
            .map(|e| e.residual)
            .ok_or(StabilityError::NotDense { cadence })
    }

    pub fn summary(&self) -> StabilitySummary {
        StabilitySummary {
            e0: self.e0,
            sup_e: self.sup_e,
            c_hat: self.c_hat,
            lambda_hat: self.lambda_hat,
            energy_identity_residual: self.energy_identity.map(|e| e.residual),
            e_final: self.e_final,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,E,comp_mass,comp_hm1,comp_v,D,cumD")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.e, r.comp_mass, r.comp_hm1, r.comp_v, r.d, r.cum_d
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilitySummary {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "supE")]
    pub sup_e: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub lambda_hat: Option<f64>,
    pub energy_identity_residual: Option<f64>,
    #[serde(rename = "E_T")]
    pub e_final: f64,
}

/// Ordinary least-squares slope of `ln max(y, 1e-300)` against `t`, using
/// only points with `y > 1e-2 y[0]`. `None` with fewer than two such points.
pub fn fit_exponential_rate(t: &[f64], y: &[f64]) -> Option<f64> {
    let y0 = *y.first()?;
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 1e-2 * y0 && v > 0.0)
        .map(|(&t, &v)| (t, v.max(1e-300).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn dissipation(u1: &Field, u2: &Field, alpha: f64) -> f64 {
    u1.zip_map(u2, |a, b| dissipation_density(a, b, alpha)).integral()
}

fn min_p_pair(m: &CoefficientModel, a: &Simulation, b: &Simulation) -> Result<f64, StabilityError> {
    let f = |s: &Simulation, which| {
        min_mobility_factor(m, &s.state().v).map_err(|e| StabilityError::Trajectory {
            which,
            source: e.into(),
        })
    };
    Ok(f(a, 1)?.min(f(b, 2)?))
}

/// Runs the configured initial data against `(u0_2, v0_2)` with identical
/// discretisation, stepping both trajectories concurrently.
pub fn run_pair(
    cfg: &SimConfig,
    u0_2: &Expr,
    v0_2: &Expr,
    opts: &PairOptions,
) -> Result<StabilityReport, StabilityError> {
    let tag = |which| move |source| StabilityError::Trajectory { which, source };
    let g = cfg.grid;
    let second = SimConfig {
        u0: u0_2.clone(),
        v0: v0_2.clone(),
        ..cfg.clone()
    };
    let mut a = Simulation::new(cfg).map_err(tag(1))?;
    let mut b = Simulation::new(&second).map_err(tag(2))?;
    let dense = cfg.output_every == 1;
    let alpha = cfg.model.alpha;
    let poisson = PoissonOptions::with_tol(opts.poisson_tol);

    let mut rows = Vec::new();
    let mut identity = dense.then(IdentityAccumulator::new);
    let mut psi: Option<Field> = None;
    let mut cum_d = 0.0;
    let mut d_prev = dissipation(&a.state().u, &b.state().u, alpha);
    let mut min_p = min_p_pair(&cfg.model, &a, &b)?;

    let mut record = |a: &Simulation, b: &Simulation, d: f64, cum_d: f64| -> Result<(), StabilityError> {
        let (sa, sb) = (a.state(), b.state());
        let du = sa.u.sub(&sb.u);
        let dv = sa.v.sub(&sb.v);
        let sol = solve_neumann_zero_mean_from(&g, &du, psi.as_ref(), &poisson)?;
        let comp_hm1 = sol.psi.grad_l2_norm().powi(2);
        if let Some(acc) = identity.as_mut() {
            acc.push(&du, &sol.psi);
        }
        rows.push(StabilityRow::new(
            sa.t,
            du.integral().powi(2),
            comp_hm1,
            dv.dot(&dv),
            d,
            cum_d,
        ));
        psi = Some(sol.psi);
        Ok(())
    };

    record(&a, &b, d_prev, 0.0)?;
    while !a.is_finished() {
        let t0 = a.state().t;
        let (ra, rb) = rayon::join(|| a.advance(), || b.advance());
        ra.map_err(tag(1))?;
        rb.map_err(tag(2))?;
        let d = dissipation(&a.state().u, &b.state().u, alpha);
        cum_d += 0.5 * (d + d_prev) * (a.state().t - t0);
        d_prev = d;
        min_p = min_p.min(min_p_pair(&cfg.model, &a, &b)?);
        if a.is_output_tick() {
            record(&a, &b, d, cum_d)?;
        }
    }

    let e0 = rows[0].e;
    let sup_e = rows.iter().map(|r| r.e).fold(0.0, f64::max);
    let c_hat = if sup_e == 0.0 { 0.0 } else { sup_e / e0 };
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.e).collect();
    Ok(StabilityReport {
        e_final: rows.last().map(|r| r.e).unwrap_or(0.0),
        lambda_hat: fit_exponential_rate(&t, &e),
        energy_identity: identity.map(|acc| acc.finish()),
        rows,
        e0,
        sup_e,
        c_hat,
        min_p,
        alpha,
    })
}

/// Grönwall balances along a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallTrace {
    pub t: Vec<f64>,
    /// `B(t) = E(t) - E(0) - lambda int_0^t E`.
    pub balance: Vec<f64>,
    /// `B(t) + c0 int_0^t D` with `c0 = min p(v) / (1 + alpha)`.
    pub dissipation_balance: Vec<f64>,
    pub lambda: f64,
    pub c0: f64,
    /// `max(0, sup B) / E(0)`; zero when `E(0) = 0`.
    pub defect: f64,
}

/// Builds the balances with the fitted rate (zero if none was fitted).
pub fn gronwall_trace(report: &StabilityReport) -> GronwallTrace {
    let lambda = report.lambda_hat.unwrap_or(0.0);
    let c0 = report.min_p / (1.0 + report.alpha);
    let mut integral = 0.0;
    let mut balance = Vec::with_capacity(report.rows.len());
    let mut dissipation_balance = Vec::with_capacity(report.rows.len());
    for (k, r) in report.rows.iter().enumerate() {
        if k > 0 {
            let p = &report.rows[k - 1];
            integral += 0.5 * (p.e + r.e) * (r.t - p.t);
        }
        let b = r.e - report.e0 - lambda * integral;
        balance.push(b);
        dissipation_balance.push(b + c0 * r.cum_d);
    }
    let worst = balance.iter().cloned().fold(0.0, f64::max);
    GronwallTrace {
        t: report.times(),
        defect: if report.e0 > 0.0 { worst / report.e0 } else { 0.0 },
        balance,
        dissipation_balance,
        lambda,
        c0,
    }
}

/// Shape of a perturbation; member `eps` of a sweep starts from
/// `(u0 + eps du, v0 + eps dv)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationShape {
    pub du: Expr,
    pub dv: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    /// `int du0^2 + int dv0^2`.
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "supE")]
    pub sup_e: f64,
    /// `sup E / Q`; zero when both vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `max ratio / min ratio` over rows with `Q > 0`.
    pub ratio_spread: f64,
}

impl SweepTable {
    pub fn bounded(&self, factor: f64) -> bool {
        self.ratio_spread <= factor
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "eps,E0,Q,supE,ratio")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.eps, r.e0, r.q, r.sup_e, r.ratio
            )?;
        }
        Ok(())
    }
}

fn perturbed(base: &Expr, shape: &Expr, eps: f64) -> Expr {
    add(base.clone(), mul(Expr::Const(eps), shape.clone()))
}

/// Runs one pair per amplitude, in parallel on at most `jobs` threads
/// (`None`: rayon default). Amplitudes must be non-negative and strictly
/// decreasing.
pub fn perturbation_sweep(
    cfg: &SimConfig,
    shape: &PerturbationShape,
    amplitudes: &[f64],
    opts: &PairOptions,
    jobs: Option<usize>,
) -> Result<SweepTable, StabilityError> {
    if amplitudes.is_empty() {
        return Err(StabilityError::InvalidInput("no amplitudes given".into()));
    }
    if amplitudes.iter().any(|&e| !(e >= 0.0 && e.is_finite())) || amplitudes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(StabilityError::InvalidInput(
            "amplitudes must be non-negative and strictly decreasing".into(),
        ));
    }
    let member = |eps: f64| -> Result<SweepRow, StabilityError> {
        let g: &Grid = &cfg.grid;
        let du0 = Field::from_expr(g, &shape.du, 0.0).map_err(|e| StabilityError::InvalidInput(e.to_string()))?;
        let dv0 = Field::from_expr(g, &shape.dv, 0.0).map_err(|e| StabilityError::InvalidInput(e.to_string()))?;
        let q = eps * eps * (du0.dot(&du0) + dv0.dot(&dv0));
        let report = run_pair(
            cfg,
            &perturbed(&cfg.u0, &shape.du, eps),
            &perturbed(&cfg.v0, &shape.dv, eps),
            opts,
        )?;
        Ok(SweepRow {
            eps,
            e0: report.e0,
            q,
            sup_e: report.sup_e,
            ratio: if report.sup_e == 0.0 { 0.0 } else { report.sup_e / q },
        })
    };
    let run_all = || amplitudes.par_iter().map(|&e| member(e)).collect::<Result<Vec<_>, _>>();
    let rows = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| StabilityError::InvalidInput(e.to_string()))?
            .install(run_all)?,
        None => run_all()?,
    };
    let ratios: Vec<f64> = rows.iter().filter(|r| r.q > 0.0).map(|r| r.ratio).collect();
    let ratio_spread = match (
        ratios.iter().cloned().reduce(f64::max),
        ratios.iter().cloned().reduce(f64::min),
    ) {
        (Some(hi), Some(lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    Ok(SweepTable { rows, ratio_spread })
}
