use std::io::{self, Write};

use serde::Serialize;

use super::SimState;
use crate::grid::face_gradient;

/// Parameters of the entropy-type functional
/// `int u ln u + (gamma/4) int |grad v|^4 / v^3 + (Ks^2/6) int v^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams {
    pub gamma: f64,
    pub ks: f64,
}

/// Computes the functional above; `0 ln 0 = 0` and face gradients are
/// averaged to cells per axis before taking magnitudes.
pub fn f_energy(s: &SimState, gamma: f64, ks: f64) -> f64 {
    let g = s.u.grid();
    let (gx, gy) = face_gradient(&s.v).cell_averages();
    let mut total = 0.0;
    for c in 0..g.cells() {
        let u = s.u.values()[c];
        let v = s.v.values()[c];
        let entropy = if u > 0.0 { u * u.ln() } else { 0.0 };
        let grad2 = gx.values()[c].powi(2) + gy.values()[c].powi(2);
        total += entropy + 0.25 * gamma * grad2 * grad2 / (v * v * v) + ks * ks / 6.0 * v * v * v;
    }
    total * g.cell_volume()
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub max_grad_v: f64,
    /// `sum_k dt_k ||grad u^k||^2` up to `t`.
    pub cum_grad_u_sq: f64,
    pub f_energy: Option<f64>,
    /// Cumulative mass added by clipping.
    pub clipped_mass: f64,
}

pub const DIAGNOSTICS_HEADER: &str =
    "t,mass_u,mass_v,min_u,max_u,min_v,max_v,max_grad_v,cum_grad_u_sq,f_energy,clipped_mass";

impl DiagnosticRecord {
    pub fn of(s: &SimState, cum_grad_u_sq: f64, clipped_mass: f64, energy: Option<EnergyParams>) -> Self {
        DiagnosticRecord {
            t: s.t,
            mass_u: s.u.integral(),
            mass_v: s.v.integral(),
            min_u: s.u.min(),
            max_u: s.u.max(),
            min_v: s.v.min(),
            max_v: s.v.max(),
            max_grad_v: face_gradient(&s.v).max_abs(),
            cum_grad_u_sq,
            f_energy: energy.map(|e| f_energy(s, e.gamma, e.ks)),
            clipped_mass,
        }
    }
}

/// Writes the diagnostics table; an absent energy is left empty.
pub fn write_diagnostics_csv<W: Write>(records: &[DiagnosticRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for r in records {
        let energy = r.f_energy.map(|e| format!("{e:.16e}")).unwrap_or_default();
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.t,
            r.mass_u,
            r.mass_v,
            r.min_u,
            r.max_u,
            r.min_v,
            r.max_v,
            r.max_grad_v,
            r.cum_grad_u_sq,
            energy,
            r.clipped_mass
        )?;
    }
    Ok(())
}
