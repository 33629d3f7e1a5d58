use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::{Command, ConfigError, RunConfig};
use super::plots::emit_plots;
use crate::coeffs::{check_finite_gamma_lipschitz, LipschitzOptions};
use crate::exprs::{add, mul, Expr};
use crate::poisson::cosine_mode_errors;
use crate::solver::{run, write_convergence_csv, write_diagnostics_csv, ConvergenceStudy};
use crate::stability::{gronwall_trace, perturbation_sweep, run_pair, PairOptions, PerturbationShape};

/// Overrides the root of relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "CROSSDIFF_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    /// 1 configuration, 2 numerics, 3 filesystem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => 3,
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Config(ConfigError::Io { .. }) | CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
        };
        let issues = match self {
            CliError::Config(ConfigError::Invalid(i)) => json!(i),
            _ => json!([]),
        };
        json!({
            "error": kind,
            "exit_code": self.exit_code(),
            "message": self.to_string(),
            "issues": issues,
        })
    }
}

fn numeric(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(e.to_string())
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// `flag` if given, else the configured directory, placed under
/// `$CROSSDIFF_OUTPUT_ROOT` when that is set and the directory is relative.
pub fn resolve_output_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(f) = flag {
        return f.to_path_buf();
    }
    let dir = &cfg.output.directory;
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => Path::new(&root).join(dir),
        _ => dir.clone(),
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn io_error(path: &Path, e: std::io::Error) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Self::io_error(&path, e))?;
        let mut out = BufWriter::new(file);
        body(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Self::io_error(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("serialisable");
        self.write(name, |out| writeln!(out, "{text}"))
    }
}

fn perturbed(base: &Expr, shape: &Expr, eps: f64) -> Expr {
    add(base.clone(), mul(Expr::Const(eps), shape.clone()))
}

/// Executes the configured command, writing into `dir` (created if needed).
/// `jobs` bounds the parallelism of sweeps.
pub fn dispatch(cfg: &RunConfig, dir: &Path, jobs: Option<usize>) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| Writer::io_error(dir, e))?;
    let mut w = Writer {
        dir: dir.to_path_buf(),
        files: Vec::new(),
    };
    let mut warnings = Vec::new();
    let sim = cfg.sim_config();
    match cfg.command {
        Command::Run => {
            let traj = run(&sim).map_err(numeric)?;
            warnings.extend(traj.warnings.iter().cloned());
            if cfg.output.csv {
                for (k, s) in traj.snapshots.iter().enumerate() {
                    w.write(&format!("u_{k:04}.csv"), |o| s.u.write_csv(o))?;
                    w.write(&format!("v_{k:04}.csv"), |o| s.v.write_csv(o))?;
                }
            }
            w.write("diagnostics.csv", |o| write_diagnostics_csv(&traj.diagnostics, o))?;
        }
        Command::Stability => {
            let spec = cfg.stability.as_ref().expect("validated");
            let u2 = spec
                .u0
                .clone()
                .unwrap_or_else(|| perturbed(&cfg.u0, &spec.du, spec.eps));
            let v2 = spec
                .v0
                .clone()
                .unwrap_or_else(|| perturbed(&cfg.v0, &spec.dv, spec.eps));
            warnings.extend(sim.validate().map_err(numeric)?);
            let opts = PairOptions {
                poisson_tol: cfg.poisson_tol,
            };
            let report = run_pair(&sim, &u2, &v2, &opts).map_err(numeric)?;
            let trace = gronwall_trace(&report);
            w.write("stability.csv", |o| report.write_csv(o))?;
            let mut summary = serde_json::to_value(report.summary()).expect("serialisable");
            summary["gronwall_defect"] = json!(trace.defect);
            w.json("summary.json", &summary)?;
        }
        Command::Sweep => {
            let spec = cfg.stability.as_ref().expect("validated");
            warnings.extend(sim.validate().map_err(numeric)?);
            let shape = PerturbationShape {
                du: spec.du.clone(),
                dv: spec.dv.clone(),
            };
            let opts = PairOptions {
                poisson_tol: cfg.poisson_tol,
            };
            let table = perturbation_sweep(&sim, &shape, &spec.amplitudes, &opts, jobs).map_err(numeric)?;
            w.write("sweep.csv", |o| table.write_csv(o))?;
            w.json(
                "sweep.json",
                &json!({
                    "ratio_spread": table.ratio_spread,
                    "factor": spec.factor,
                    "bounded": table.bounded(spec.factor),
                }),
            )?;
        }
        Command::Mms => {
            let spec = cfg.mms.as_ref().expect("validated");
            let study = ConvergenceStudy {
                model: cfg.model.clone(),
                solution: spec.solution.clone(),
                dim: cfg.grid.dim(),
                length: cfg.grid.length(0),
                levels: spec.levels.clone(),
                dt_factor: spec.dt_factor,
                t_end: spec.t_end,
                linear: cfg.linear,
            };
            let rows = study.run().map_err(numeric)?;
            w.write("convergence.csv", |o| write_convergence_csv(&rows, o))?;
        }
        Command::CheckCoeffs => {
            let spec = cfg.check.as_ref().expect("validated");
            let opts = LipschitzOptions {
                budget: spec.budget,
                seed: spec.seed,
                ..Default::default()
            };
            let verdict =
                check_finite_gamma_lipschitz(&spec.f, spec.gamma, spec.a1, spec.a2, &opts).map_err(numeric)?;
            w.json("lipschitz.json", &verdict)?;
        }
        Command::PoissonTest => {
            let rows = cosine_mode_errors(&cfg.poisson_levels, cfg.grid.length(0), cfg.poisson_tol).map_err(numeric)?;
            w.write("poisson.csv", |o| {
                writeln!(o, "n,h,max_error,order")?;
                for (k, &(n, h, e)) in rows.iter().enumerate() {
                    let order = if k > 0 {
                        let (_, h0, e0) = rows[k - 1];
                        format!("{:.6}", (e0 / e).ln() / (h0 / h).ln())
                    } else {
                        String::new()
                    };
                    writeln!(o, "{n},{h:.16e},{e:.16e},{order}")?;
                }
                Ok(())
            })?;
        }
    }
    if cfg.output.gnuplot && cfg.command != Command::CheckCoeffs {
        let script = emit_plots(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        w.write("plot.gp", |o| o.write_all(script.as_bytes()))?;
    }
    Ok(Outcome {
        directory: dir.to_path_buf(),
        files: w.files,
        warnings,
    })
}
