//! JSON run configuration.
//!
//! ```json
//! {
//!   "command": "run",
//!   "grid":    {"dim": 1, "n": 64, "L": 1.0},
//!   "model":   {"preset": "case2", "chi": 1.0, "l": 1.0},
//!   "initial": {"u0": "1 + 0.5*cos(pi*x)", "v0": "1"},
//!   "time":    {"dt": 1e-4, "t_end": 0.1, "cadence": 100},
//!   "solver":  {"tol": 1e-10, "poisson_tol": 1e-10},
//!   "output":  {"directory": "out", "formats": ["csv", "gnuplot"]}
//! }
//! ```
//!
//! Every block is optional except the one its command needs (`stability`,
//! `mms`, `check`). Unknown keys are errors.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::coeffs::{build_preset, CoefficientModel, Params, PresetCase};
use crate::exprs::{parse, Expr};
use crate::grid::Grid;
use crate::solver::{EnergyParams, LinearTolerances, Manufactured, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Run,
    Stability,
    Sweep,
    Mms,
    CheckCoeffs,
    PoissonTest,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Run,
        Command::Stability,
        Command::Sweep,
        Command::Mms,
        Command::CheckCoeffs,
        Command::PoissonTest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Stability => "stability",
            Command::Sweep => "sweep",
            Command::Mms => "mms",
            Command::CheckCoeffs => "check-coeffs",
            Command::PoissonTest => "poisson-test",
        }
    }
}

/// One validation failure, addressed by a dotted field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid configuration ({} issue(s)): {}", .0.len(), join(.0))]
    Invalid(Vec<ConfigIssue>),
}

fn join(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

/// Second trajectory of a stability run: explicit data, or the base data
/// plus `eps` times a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySpec {
    pub u0: Option<Expr>,
    pub v0: Option<Expr>,
    pub du: Expr,
    pub dv: Expr,
    pub eps: f64,
    pub amplitudes: Vec<f64>,
    /// Acceptance bound on the sweep ratio spread.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsSpec {
    pub solution: Manufactured,
    pub levels: Vec<usize>,
    pub dt_factor: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub f: Expr,
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub csv: bool,
    pub gnuplot: bool,
}

/// Fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub grid: Grid,
    pub model: CoefficientModel,
    pub u0: Expr,
    pub v0: Expr,
    pub dt: f64,
    pub t_end: f64,
    pub cadence: usize,
    pub linear: LinearTolerances,
    pub poisson_tol: f64,
    pub energy: Option<EnergyParams>,
    pub stability: Option<StabilitySpec>,
    pub mms: Option<MmsSpec>,
    pub check: Option<CheckSpec>,
    /// Cells per axis for the Poisson eigenfunction study.
    pub poisson_levels: Vec<usize>,
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(
            self.grid,
            self.model.clone(),
            self.u0.clone(),
            self.v0.clone(),
            self.dt,
            self.t_end,
        );
        cfg.output_every = self.cadence;
        cfg.linear = self.linear;
        cfg.energy = self.energy;
        cfg
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// Validates configuration text, reporting every issue found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        ConfigError::Invalid(vec![ConfigIssue {
            field: "<json>".into(),
            message: format!("line {} column {}: {}", e.line(), e.column(), e),
        }])
    })?;
    let mut v = Validator::default();
    let cfg = v.root(&root);
    match cfg {
        Some(cfg) if v.issues.is_empty() => Ok(cfg),
        _ => Err(ConfigError::Invalid(v.issues)),
    }
}

#[derive(Default)]
struct Validator {
    issues: Vec<ConfigIssue>,
}

type Obj = Map<String, Value>;

static EMPTY: std::sync::OnceLock<Obj> = std::sync::OnceLock::new();

impl Validator {
    fn issue(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            field: field.into(),
            message: message.into(),
        });
    }

    fn block<'a>(&mut self, root: &'a Obj, name: &str, keys: &[&str]) -> Option<&'a Obj> {
        match root.get(name) {
            None => None,
            Some(Value::Object(o)) => {
                self.unknown_keys(o, name, keys);
                Some(o)
            }
            Some(_) => {
                self.issue(name, "must be an object");
                None
            }
        }
    }

    fn unknown_keys(&mut self, o: &Obj, prefix: &str, keys: &[&str]) {
        for k in o.keys() {
            if !keys.contains(&k.as_str()) {
                let field = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                self.issue(field, format!("unknown key (expected one of: {})", keys.join(", ")));
            }
        }
    }

    fn number(&mut self, o: &Obj, prefix: &str, key: &str) -> Option<f64> {
        match o.get(key) {
            None => None,
            Some(Value::Number(n)) => n.as_f64(),
            Some(_) => {
                self.issue(format!("{prefix}.{key}"), "must be a number");
                None
            }
        }
    }

    fn positive(&mut self, o: &Obj, prefix: &str, key: &str, default: f64) -> f64 {
        match self.number(o, prefix, key) {
            Some(x) if x > 0.0 && x.is_finite() => x,
            Some(x) => {
                self.issue(format!("{prefix}.{key}"), format!("must be positive, got {x}"));
                default
            }
            None => default,
        }
    }

    fn count(&mut self, value: &Value, field: &str, min: usize) -> Option<usize> {
        match value.as_u64() {
            Some(n) if n as usize >= min => Some(n as usize),
            _ => {
                self.issue(field, format!("must be an integer >= {min}"));
                None
            }
        }
    }

    fn integer(&mut self, o: &Obj, prefix: &str, key: &str, min: usize, default: usize) -> usize {
        match o.get(key) {
            None => default,
            Some(v) => self.count(v, &format!("{prefix}.{key}"), min).unwrap_or(default),
        }
    }

    fn string<'a>(&mut self, o: &'a Obj, prefix: &str, key: &str) -> Option<&'a str> {
        match o.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.issue(format!("{prefix}.{key}"), "must be a string");
                None
            }
        }
    }

    fn expr(&mut self, o: &Obj, prefix: &str, key: &str) -> Option<Expr> {
        let text = self.string(o, prefix, key)?;
        match parse(text) {
            Ok(e) => Some(e),
            Err(err) => {
                self.issue(format!("{prefix}.{key}"), format!("cannot parse `{text}`: {err}"));
                None
            }
        }
    }

    fn expr_or(&mut self, o: &Obj, prefix: &str, key: &str, default: &str) -> Expr {
        if o.contains_key(key) {
            self.expr(o, prefix, key).unwrap_or(Expr::Const(1.0))
        } else {
            parse(default).expect("default expression parses")
        }
    }

    fn number_list(&mut self, value: &Value, field: &str) -> Option<Vec<f64>> {
        let arr = match value.as_array() {
            Some(a) if !a.is_empty() => a,
            _ => {
                self.issue(field, "must be a non-empty array of numbers");
                return None;
            }
        };
        let mut out = Vec::new();
        for (k, x) in arr.iter().enumerate() {
            match x.as_f64() {
                Some(x) => out.push(x),
                None => self.issue(format!("{field}[{k}]"), "must be a number"),
            }
        }
        (out.len() == arr.len()).then_some(out)
    }

    fn root(&mut self, root: &Value) -> Option<RunConfig> {
        let Some(root) = root.as_object() else {
            self.issue("<root>", "configuration must be a JSON object");
            return None;
        };
        const TOP: &[&str] = &[
            "command",
            "grid",
            "model",
            "initial",
            "time",
            "stability",
            "mms",
            "check",
            "poisson",
            "energy",
            "solver",
            "output",
        ];
        self.unknown_keys(root, "", TOP);
        let empty = EMPTY.get_or_init(Map::new);

        let command = match root.get("command") {
            None => Some(Command::Run),
            Some(Value::String(s)) => {
                let c = Command::ALL.into_iter().find(|c| c.name() == s);
                if c.is_none() {
                    let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                    self.issue(
                        "command",
                        format!("unknown command `{s}` (expected {})", names.join(", ")),
                    );
                }
                c
            }
            Some(_) => {
                self.issue("command", "must be a string");
                None
            }
        };

        let grid_block = self.block(root, "grid", &["dim", "n", "L"]).unwrap_or(empty);
        let grid = self.grid(grid_block);
        let model = self.model(root.get("model"));

        let initial = self.block(root, "initial", &["u0", "v0"]).unwrap_or(empty);
        let u0 = self.expr_or(initial, "initial", "u0", "1");
        let v0 = self.expr_or(initial, "initial", "v0", "1");

        let time = self.block(root, "time", &["dt", "t_end", "cadence"]).unwrap_or(empty);
        let dt = self.positive(time, "time", "dt", 1e-4);
        let t_end = self.positive(time, "time", "t_end", 0.1);
        let cadence = self.integer(time, "time", "cadence", 1, 1);
        if t_end < dt {
            self.issue("time.t_end", format!("t_end = {t_end} must be at least dt = {dt}"));
        }

        let solver = self
            .block(root, "solver", &["tol", "max_iter", "poisson_tol"])
            .unwrap_or(empty);
        let linear = LinearTolerances {
            tol: self.positive(solver, "solver", "tol", 1e-10),
            max_iter: solver.get("max_iter").and_then(|v| self.count(v, "solver.max_iter", 1)),
        };
        let poisson_tol = self.positive(solver, "solver", "poisson_tol", crate::poisson::DEFAULT_TOL);

        let energy = self.block(root, "energy", &["gamma", "ks"]).map(|o| EnergyParams {
            gamma: self.number(o, "energy", "gamma").unwrap_or(1.0),
            ks: self.number(o, "energy", "ks").unwrap_or(1.0),
        });

        let stability = self.stability(root, command);
        let mms = self.mms(root, command);
        let check = self.check(root, command);

        let poisson = self.block(root, "poisson", &["levels"]).unwrap_or(empty);
        let poisson_levels = match poisson.get("levels") {
            Some(v) => self.levels(v, "poisson.levels"),
            None => vec![32, 64, 128, 256],
        };

        let output = self.block(root, "output", &["directory", "formats"]).unwrap_or(empty);
        let directory = PathBuf::from(self.string(output, "output", "directory").unwrap_or("output"));
        let mut formats: BTreeSet<String> = ["csv".to_string(), "gnuplot".to_string()].into();
        if let Some(f) = output.get("formats") {
            match f.as_array() {
                Some(list) => {
                    formats.clear();
                    for (k, x) in list.iter().enumerate() {
                        match x.as_str() {
                            Some(s @ ("csv" | "gnuplot")) => {
                                formats.insert(s.to_string());
                            }
                            _ => self.issue(format!("output.formats[{k}]"), "expected \"csv\" or \"gnuplot\""),
                        }
                    }
                }
                None => self.issue("output.formats", "must be an array"),
            }
        }

        Some(RunConfig {
            command: command?,
            grid: grid?,
            model: model?,
            u0,
            v0,
            dt,
            t_end,
            cadence,
            linear,
            poisson_tol,
            energy,
            stability,
            mms,
            check,
            poisson_levels,
            output: OutputSpec {
                directory,
                csv: formats.contains("csv"),
                gnuplot: formats.contains("gnuplot"),
            },
        })
    }

    fn axis_pair(&mut self, o: &Obj, key: &str, dim: usize) -> Option<[Value; 2]> {
        match o.get(key)? {
            Value::Array(a) if a.len() == dim => Some([a[0].clone(), a.get(1).cloned().unwrap_or(a[0].clone())]),
            Value::Array(_) => {
                self.issue(format!("grid.{key}"), format!("expected {dim} entries"));
                None
            }
            v => Some([v.clone(), v.clone()]),
        }
    }

    fn grid(&mut self, o: &Obj) -> Option<Grid> {
        let dim = self.integer(o, "grid", "dim", 1, 1);
        if dim > 2 {
            self.issue("grid.dim", "must be 1 or 2");
            return None;
        }
        let n = self.axis_pair(o, "n", dim).unwrap_or([64.into(), 64.into()]);
        let l = self.axis_pair(o, "L", dim).unwrap_or([1.0.into(), 1.0.into()]);
        let nx = self.count(&n[0], "grid.n", 2);
        let ny = if dim == 2 {
            self.count(&n[1], "grid.n", 2)
        } else {
            Some(1)
        };
        let mut len = |v: &Value| match v.as_f64() {
            Some(x) if x > 0.0 && x.is_finite() => Some(x),
            _ => {
                self.issue("grid.L", "must be a positive number");
                None
            }
        };
        let lx = len(&l[0]);
        let ly = if dim == 2 { len(&l[1]) } else { Some(1.0) };
        let g = if dim == 1 {
            Grid::new_1d(nx?, lx?)
        } else {
            Grid::new_2d(nx?, ny?, lx?, ly?)
        };
        g.map_err(|e| self.issue("grid", e.to_string())).ok()
    }

    fn model(&mut self, value: Option<&Value>) -> Option<CoefficientModel> {
        let o = match value {
            None => return Some(CoefficientModel::heat()),
            Some(Value::Object(o)) => o,
            Some(_) => {
                self.issue("model", "must be an object");
                return None;
            }
        };
        if let Some(name) = o.get("preset") {
            let Some(name) = name.as_str() else {
                self.issue("model.preset", "must be a string");
                return None;
            };
            let case = match PresetCase::from_name(name) {
                Ok(c) => c,
                Err(e) => {
                    self.issue("model.preset", e.to_string());
                    return None;
                }
            };
            let mut allowed = vec!["preset", "chi", "beta"];
            allowed.extend_from_slice(case.extra_parameters());
            self.unknown_keys(o, "model", &allowed);
            let mut params = Params::new();
            for &k in &allowed[1..] {
                if let Some(x) = self.number(o, "model", k) {
                    params.insert(k.to_string(), x);
                }
            }
            return build_preset(case, &params)
                .map_err(|e| self.issue("model", e.to_string()))
                .ok();
        }
        const KEYS: &[&str] = &[
            "alpha",
            "p",
            "a12",
            "a22",
            "q_lower",
            "r1_linear",
            "r1_tilde",
            "r2_linear",
            "r2_tilde",
        ];
        self.unknown_keys(o, "model", KEYS);
        let alpha = self.number(o, "model", "alpha").unwrap_or(0.0);
        let mut e = |key: &str, default: &str| -> Option<Expr> {
            if o.contains_key(key) {
                self.expr(o, "model", key)
            } else {
                Some(parse(default).expect("default parses"))
            }
        };
        let p = e("p", "1");
        let a12 = e("a12", "0");
        let a22 = e("a22", "1");
        let r1l = e("r1_linear", "0");
        let r1t = e("r1_tilde", "0");
        let r2l = e("r2_linear", "0");
        let r2t = e("r2_tilde", "0");
        // a v-only A22 is its own lower bound
        let q_default = match &a22 {
            Some(a) if !a.depends_on(crate::exprs::Var::U) => a.to_string(),
            _ => "1".to_string(),
        };
        let q = e("q_lower", &q_default);
        let m = CoefficientModel {
            alpha,
            p: p?,
            a12: a12?,
            a22: a22?,
            q_lower: q?,
            r1_linear: r1l?,
            r1_tilde: r1t?,
            r2_linear: r2l?,
            r2_tilde: r2t?,
        };
        m.check_structure()
            .map_err(|e| self.issue("model", e.to_string()))
            .ok()?;
        Some(m)
    }

    fn levels(&mut self, v: &Value, field: &str) -> Vec<usize> {
        let list = self.number_list(v, field).unwrap_or_default();
        let out: Vec<usize> = list
            .iter()
            .filter(|x| x.fract() == 0.0 && **x >= 2.0)
            .map(|x| *x as usize)
            .collect();
        if out.len() != list.len() {
            self.issue(field, "levels must be integers >= 2");
        } else if out.windows(2).any(|w| w[1] <= w[0]) {
            self.issue(field, "levels must increase");
        }
        out
    }

    fn stability(&mut self, root: &Obj, command: Option<Command>) -> Option<StabilitySpec> {
        let needed = matches!(command, Some(Command::Stability | Command::Sweep));
        let keys = &["u0", "v0", "du", "dv", "eps", "amplitudes", "factor"];
        let Some(o) = self.block(root, "stability", keys) else {
            if needed {
                self.issue("stability", "required for this command");
            }
            return None;
        };
        let u0 = o.contains_key("u0").then(|| self.expr(o, "stability", "u0")).flatten();
        let v0 = o.contains_key("v0").then(|| self.expr(o, "stability", "v0")).flatten();
        let du = self.expr_or(o, "stability", "du", "0");
        let dv = self.expr_or(o, "stability", "dv", "0");
        let eps = match self.number(o, "stability", "eps") {
            Some(e) if e >= 0.0 && e.is_finite() => e,
            Some(e) => {
                self.issue("stability.eps", format!("must be non-negative, got {e}"));
                0.0
            }
            None => 0.0,
        };
        let amplitudes = match o.get("amplitudes") {
            Some(v) => {
                let a = self.number_list(v, "stability.amplitudes").unwrap_or_default();
                if a.iter().any(|x| !(*x >= 0.0)) || a.windows(2).any(|w| w[1] >= w[0]) {
                    self.issue("stability.amplitudes", "must be non-negative and strictly decreasing");
                }
                a
            }
            None => {
                if command == Some(Command::Sweep) {
                    self.issue("stability.amplitudes", "required for sweep");
                }
                Vec::new()
            }
        };
        let factor = self.positive(o, "stability", "factor", 4.0);
        Some(StabilitySpec {
            u0,
            v0,
            du,
            dv,
            eps,
            amplitudes,
            factor,
        })
    }

    fn mms(&mut self, root: &Obj, command: Option<Command>) -> Option<MmsSpec> {
        let keys = &["u_star", "v_star", "levels", "dt_factor", "t_end"];
        let Some(o) = self.block(root, "mms", keys) else {
            if command == Some(Command::Mms) {
                self.issue("mms", "required for this command");
            }
            return None;
        };
        let u = self.expr(o, "mms", "u_star");
        let v = self.expr(o, "mms", "v_star");
        for k in ["u_star", "v_star"] {
            if !o.contains_key(k) {
                self.issue(format!("mms.{k}"), "required");
            }
        }
        let levels = match o.get("levels") {
            Some(v) => self.levels(v, "mms.levels"),
            None => vec![32, 64, 128],
        };
        let dt_factor = self.positive(o, "mms", "dt_factor", 1.0);
        let t_end = self.positive(o, "mms", "t_end", 0.1);
        Some(MmsSpec {
            solution: Manufactured { u_star: u?, v_star: v? },
            levels,
            dt_factor,
            t_end,
        })
    }

    fn check(&mut self, root: &Obj, command: Option<Command>) -> Option<CheckSpec> {
        let keys = &["f", "gamma", "a1", "a2", "budget", "seed"];
        let Some(o) = self.block(root, "check", keys) else {
            if command == Some(Command::CheckCoeffs) {
                self.issue("check", "required for this command");
            }
            return None;
        };
        if !o.contains_key("f") {
            self.issue("check.f", "required");
        }
        let f = self.expr(o, "check", "f");
        let gamma = self.positive(o, "check", "gamma", 1.0);
        let a1 = self.positive(o, "check", "a1", 1.0);
        let a2 = self.positive(o, "check", "a2", 1.0);
        let budget = self.integer(o, "check", "budget", 100, 20_000);
        let seed = self.integer(o, "check", "seed", 0, 0x5eed) as u64;
        Some(CheckSpec {
            f: f?,
            gamma,
            a1,
            a2,
            budget,
            seed,
        })
    }
}
