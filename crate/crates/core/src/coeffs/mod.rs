//! Coefficient structure of the triangular system
//!
//! ```text
//! u_t = div(p(v) u^alpha grad u) + div(A12(u,v) grad v) + R1(u,v)
//! v_t = div(A22(u,v) grad v) + R2(u,v)
//! ```
//!
//! with reactions split as `R_i(u,v) = u q_i(v) + R~_i(u,v)`.

mod inequalities;
mod lipschitz;
mod presets;

use std::collections::BTreeMap;

use crate::exprs::{self, parse, Expr, ExprError, Var};

pub use inequalities::{
    dissipation_density, mean_power_bounds_check, power_gap_constant, power_gap_inequality_check, PowerGap,
};
pub use lipschitz::{check_finite_gamma_lipschitz, LipschitzOptions, LipschitzVerdict, Verdict};
pub use presets::{build_preset, PresetCase};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoeffError {
    #[error("degeneracy exponent alpha = {0} must be finite and non-negative")]
    NegativeAlpha(f64),
    #[error("{field} may only depend on {allowed}, found `{var}`")]
    ForeignVariable {
        field: &'static str,
        allowed: &'static str,
        var: Var,
    },
    #[error("{field} = {value} is not positive at v = {v}")]
    NotPositive { field: &'static str, v: f64, value: f64 },
    #[error("A22({u}, {v}) = {a22} lies below q_lower(v) = {q}")]
    LowerBoundViolated { u: f64, v: f64, a22: f64, q: f64 },
    #[error("reaction decomposition mismatch at ({u}, {v}): split form {split}, direct {direct}")]
    DecompositionMismatch { u: f64, v: f64, split: f64, direct: f64 },
    #[error("unknown preset `{0}` (expected case1..case6)")]
    UnknownPreset(String),
    #[error("preset {case} requires beta >= 3/2, got {beta}")]
    BetaTooSmall { case: u8, beta: f64 },
    #[error("preset {case}: {message}")]
    InvalidParameter { case: u8, message: String },
    #[error("preset {case} is missing parameter `{name}`")]
    MissingParameter { case: u8, name: &'static str },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Which of the two reactions a decomposition check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    R1,
    R2,
}

/// One instance of the triangular system.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    pub alpha: f64,
    /// Mobility factor `p(v)` in `A11 = p(v) u^alpha`.
    pub p: Expr,
    pub a12: Expr,
    pub a22: Expr,
    /// Claimed lower bound `A22(u, v) >= q_lower(v) > 0`.
    pub q_lower: Expr,
    pub r1_linear: Expr,
    pub r1_tilde: Expr,
    pub r2_linear: Expr,
    pub r2_tilde: Expr,
}

impl CoefficientModel {
    /// Builds a model from expression strings, checking which variables each
    /// coefficient is allowed to use.
    #[allow(clippy::too_many_arguments)]
    pub fn from_strings(
        alpha: f64,
        p: &str,
        a12: &str,
        a22: &str,
        q_lower: &str,
        r1_linear: &str,
        r1_tilde: &str,
        r2_linear: &str,
        r2_tilde: &str,
    ) -> Result<Self, CoeffError> {
        let m = CoefficientModel {
            alpha,
            p: parse(p)?,
            a12: parse(a12)?,
            a22: parse(a22)?,
            q_lower: parse(q_lower)?,
            r1_linear: parse(r1_linear)?,
            r1_tilde: parse(r1_tilde)?,
            r2_linear: parse(r2_linear)?,
            r2_tilde: parse(r2_tilde)?,
        };
        m.check_structure()?;
        Ok(m)
    }

    /// Pure heat equation for `u` (alpha = 0, p = 1) and for `v`, no coupling,
    /// no reactions.
    pub fn heat() -> Self {
        Self::from_strings(0.0, "1", "0", "1", "1", "0", "0", "0", "0").expect("valid")
    }

    /// Lipschitz index `1 + alpha/2` the coefficient assumptions impose.
    pub fn gamma(&self) -> f64 {
        1.0 + self.alpha / 2.0
    }

    /// Checks alpha and the variable dependencies of every coefficient.
    pub fn check_structure(&self) -> Result<(), CoeffError> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(CoeffError::NegativeAlpha(self.alpha));
        }
        let only_v: &[Var] = &[Var::V];
        let uv: &[Var] = &[Var::U, Var::V];
        let checks: [(&'static str, &Expr, &[Var], &'static str); 8] = [
            ("p", &self.p, only_v, "v"),
            ("a12", &self.a12, uv, "u, v"),
            ("a22", &self.a22, uv, "u, v"),
            ("q_lower", &self.q_lower, only_v, "v"),
            ("r1_linear", &self.r1_linear, only_v, "v"),
            ("r1_tilde", &self.r1_tilde, uv, "u, v"),
            ("r2_linear", &self.r2_linear, only_v, "v"),
            ("r2_tilde", &self.r2_tilde, uv, "u, v"),
        ];
        for (field, e, allowed_vars, allowed) in checks {
            if let Some(var) = e.variables().into_iter().find(|v| !allowed_vars.contains(v)) {
                return Err(CoeffError::ForeignVariable { field, allowed, var });
            }
        }
        Ok(())
    }

    /// `A11(u, v) = p(v) u^alpha`.
    pub fn a11(&self, u: f64, v: f64) -> Result<f64, ExprError> {
        Ok(self.p.eval_uv(u, v)? * exprs::power(u, self.alpha))
    }

    pub fn r1(&self, u: f64, v: f64) -> Result<f64, ExprError> {
        Ok(u * self.r1_linear.eval_uv(u, v)? + self.r1_tilde.eval_uv(u, v)?)
    }

    pub fn r2(&self, u: f64, v: f64) -> Result<f64, ExprError> {
        Ok(u * self.r2_linear.eval_uv(u, v)? + self.r2_tilde.eval_uv(u, v)?)
    }

    /// `A11` as an expression in `(u, v)`.
    pub fn a11_expr(&self) -> Expr {
        exprs::mul(self.p.clone(), exprs::pow(Expr::Var(Var::U), self.alpha))
    }

    pub fn r1_expr(&self) -> Expr {
        exprs::add(
            exprs::mul(Expr::Var(Var::U), self.r1_linear.clone()),
            self.r1_tilde.clone(),
        )
    }

    pub fn r2_expr(&self) -> Expr {
        exprs::add(
            exprs::mul(Expr::Var(Var::U), self.r2_linear.clone()),
            self.r2_tilde.clone(),
        )
    }

    pub fn has_reactions(&self) -> bool {
        [&self.r1_linear, &self.r1_tilde, &self.r2_linear, &self.r2_tilde]
            .iter()
            .any(|e| e.as_const() != Some(0.0))
    }

    /// Samples the positivity and lower-bound invariants on
    /// `[u_lo, u_hi] x [v_lo, v_hi]` with `samples` points per axis.
    pub fn validate_on_box(&self, u_range: (f64, f64), v_range: (f64, f64), samples: usize) -> Result<(), CoeffError> {
        self.check_structure()?;
        let samples = samples.max(2);
        let lerp = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        for j in 0..samples {
            let v = lerp(v_range, j);
            let p = self.p.eval_uv(0.0, v)?;
            if p <= 0.0 {
                return Err(CoeffError::NotPositive {
                    field: "p",
                    v,
                    value: p,
                });
            }
            let q = self.q_lower.eval_uv(0.0, v)?;
            if q <= 0.0 {
                return Err(CoeffError::NotPositive {
                    field: "q_lower",
                    v,
                    value: q,
                });
            }
            for i in 0..samples {
                let u = lerp(u_range, i);
                let a22 = self.a22.eval_uv(u, v)?;
                if a22 - q < -1e-12 {
                    return Err(CoeffError::LowerBoundViolated { u, v, a22, q });
                }
                self.a12.eval_uv(u, v)?;
                self.r1(u, v)?;
                self.r2(u, v)?;
            }
        }
        Ok(())
    }

    /// Compares `u q_i(v) + R~_i(u, v)` with a directly supplied reaction on
    /// a sample box; agreement is required to `1e-12` (relative above 1).
    pub fn check_decomposition(
        &self,
        which: Reaction,
        direct: &Expr,
        u_range: (f64, f64),
        v_range: (f64, f64),
        samples: usize,
    ) -> Result<(), CoeffError> {
        let samples = samples.max(2);
        let lerp = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        for j in 0..samples {
            for i in 0..samples {
                let (u, v) = (lerp(u_range, i), lerp(v_range, j));
                let split = match which {
                    Reaction::R1 => self.r1(u, v)?,
                    Reaction::R2 => self.r2(u, v)?,
                };
                let d = direct.eval_uv(u, v)?;
                if (split - d).abs() > 1e-12 * d.abs().max(1.0) {
                    return Err(CoeffError::DecompositionMismatch { u, v, split, direct: d });
                }
            }
        }
        Ok(())
    }
}

/// Named real parameters for presets (`chi`, `beta`, `l`, `rho`, `mu`,
/// `kappa`).
pub type Params = BTreeMap<String, f64>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn foreign_variables_rejected() {
        let err = CoefficientModel::from_strings(1.0, "u", "0", "1", "1", "0", "0", "0", "0").unwrap_err();
        assert!(matches!(
            err,
            CoeffError::ForeignVariable {
                field: "p",
                var: Var::U,
                ..
            }
        ));
        assert!(CoefficientModel::from_strings(-1.0, "1", "0", "1", "1", "0", "0", "0", "0").is_err());
    }

    #[test]
    fn lower_bound_checked() {
        let m = CoefficientModel::from_strings(0.0, "1", "0", "1 + u", "2", "0", "0", "0", "0").unwrap();
        assert!(matches!(
            m.validate_on_box((0.0, 10.0), (0.01, 10.0), 11),
            Err(CoeffError::LowerBoundViolated { .. })
        ));
        let m = CoefficientModel::from_strings(0.0, "1", "0", "1 + u", "1", "0", "0", "0", "0").unwrap();
        m.validate_on_box((0.0, 10.0), (0.01, 10.0), 11).unwrap();
    }

    #[test]
    fn decomposition_matches_direct_reaction() {
        let m = CoefficientModel::from_strings(1.0, "v", "0", "1", "1", "1", "-u^2", "-v", "0").unwrap();
        m.check_decomposition(Reaction::R1, &parse("u - u^2").unwrap(), (0.0, 10.0), (0.01, 10.0), 21)
            .unwrap();
        m.check_decomposition(Reaction::R2, &parse("-u*v").unwrap(), (0.0, 10.0), (0.01, 10.0), 21)
            .unwrap();
        assert!(m
            .check_decomposition(Reaction::R1, &parse("u").unwrap(), (0.0, 10.0), (0.01, 10.0), 5)
            .is_err());
    }

    #[test]
    fn a11_is_degenerate_at_zero() {
        let m = CoefficientModel::from_strings(1.0, "v", "0", "1", "1", "0", "0", "0", "0").unwrap();
        assert_eq!(m.a11(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(m.a11(3.0, 2.0).unwrap(), 6.0);
        let m0 = CoefficientModel::heat();
        assert_eq!(m0.a11(0.0, 2.0).unwrap(), 1.0);
    }
}
