//! Doubly degenerate nutrient-taxis presets
//!
//! ```text
//! u_t = div(u v grad u) - div(chi u^beta v grad v) + f(u, v)
//! v_t = lap v - u v
//! ```
//!
//! | case | beta      | f            |
//! |------|-----------|--------------|
//! | 1    | 2         | u v          |
//! | 2    | 2         | l u v        |
//! | 3    | [3/2, 2)  | l u v        |
//! | 4    | 2         | u - u^2      |
//! | 5    | [3/2, 2)  | l u v        |
//! | 6    | 2         | rho u - mu u^kappa |

use super::{CoeffError, CoefficientModel, Params};
use crate::exprs::{mul, neg, pow, Expr, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetCase(u8);

impl PresetCase {
    pub fn new(id: u8) -> Option<Self> {
        (1..=6).contains(&id).then_some(PresetCase(id))
    }

    /// Parses `"case1"` .. `"case6"`.
    pub fn from_name(name: &str) -> Result<Self, CoeffError> {
        name.strip_prefix("case")
            .and_then(|d| d.parse::<u8>().ok())
            .and_then(PresetCase::new)
            .ok_or_else(|| CoeffError::UnknownPreset(name.to_string()))
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> String {
        format!("case{}", self.0)
    }

    fn beta_range_open(self) -> bool {
        matches!(self.0, 3 | 5)
    }

    /// Parameter names the preset reads besides `chi` and `beta`.
    pub fn extra_parameters(self) -> &'static [&'static str] {
        match self.0 {
            2 | 3 | 5 => &["l"],
            6 => &["rho", "mu", "kappa"],
            _ => &[],
        }
    }
}

fn require(case: u8, params: &Params, name: &'static str) -> Result<f64, CoeffError> {
    params
        .get(name)
        .copied()
        .ok_or(CoeffError::MissingParameter { case, name })
}

/// Builds the coefficient model of preset `case`.
///
/// `chi` is always required; `beta` defaults to 2 where the case fixes it and
/// is required for cases 3 and 5.
pub fn build_preset(case: PresetCase, params: &Params) -> Result<CoefficientModel, CoeffError> {
    let id = case.id();
    let invalid = |message: String| CoeffError::InvalidParameter { case: id, message };

    let chi = require(id, params, "chi")?;
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(invalid(format!("chi must be positive, got {chi}")));
    }
    let beta = match params.get("beta") {
        Some(b) => *b,
        None if case.beta_range_open() => return Err(CoeffError::MissingParameter { case: id, name: "beta" }),
        None => 2.0,
    };
    if !(beta >= 1.5) {
        return Err(CoeffError::BetaTooSmall { case: id, beta });
    }
    if case.beta_range_open() {
        if beta >= 2.0 {
            return Err(invalid(format!("beta must lie in [3/2, 2), got {beta}")));
        }
    } else if beta != 2.0 {
        return Err(invalid(format!("beta is fixed to 2, got {beta}")));
    }

    let u = || Expr::Var(Var::U);
    let v = || Expr::Var(Var::V);
    let (r1_linear, r1_tilde) = match id {
        1 => (v(), Expr::Const(0.0)),
        2 | 3 | 5 => {
            let l = require(id, params, "l")?;
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid(format!("l must be non-negative, got {l}")));
            }
            (mul(Expr::Const(l), v()), Expr::Const(0.0))
        }
        4 => (Expr::Const(1.0), neg(pow(u(), 2.0))),
        6 => {
            let rho = require(id, params, "rho")?;
            let mu = require(id, params, "mu")?;
            let kappa = require(id, params, "kappa")?;
            if !(rho > 0.0 && mu > 0.0) {
                return Err(invalid(format!("rho and mu must be positive, got {rho}, {mu}")));
            }
            // kappa > (d + 2)/2 with d >= 2
            if !(kappa > 2.0 && kappa.is_finite()) {
                return Err(invalid(format!("kappa must exceed 2, got {kappa}")));
            }
            (Expr::Const(rho), mul(Expr::Const(-mu), pow(u(), kappa)))
        }
        _ => unreachable!("PresetCase is 1..=6"),
    };

    let model = CoefficientModel {
        alpha: 1.0,
        p: v(),
        a12: mul(mul(Expr::Const(-chi), pow(u(), beta)), v()),
        a22: Expr::Const(1.0),
        q_lower: Expr::Const(1.0),
        r1_linear,
        r1_tilde,
        r2_linear: neg(v()),
        r2_tilde: Expr::Const(0.0),
    };
    model.check_structure()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Reaction;
    use crate::exprs::parse;

    fn params(pairs: &[(&str, f64)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn case2_structure() {
        let m = build_preset(PresetCase::new(2).unwrap(), &params(&[("chi", 0.7), ("l", 1.0)])).unwrap();
        assert_eq!(m.alpha, 1.0);
        for (u, v) in [(0.5, 2.0), (3.0, 0.1)] {
            assert!((m.a12.eval_uv(u, v).unwrap() + 0.7 * u * u * v).abs() < 1e-14);
            assert_eq!(m.r1_linear.eval_uv(u, v).unwrap(), v);
            assert_eq!(m.r1_tilde.eval_uv(u, v).unwrap(), 0.0);
            assert_eq!(m.a11(u, v).unwrap(), u * v);
            assert_eq!(m.r2(u, v).unwrap(), -u * v);
        }
        m.check_decomposition(Reaction::R1, &parse("u*v").unwrap(), (0.0, 10.0), (0.01, 10.0), 11)
            .unwrap();
    }

    #[test]
    fn case4_logistic_split() {
        let m = build_preset(PresetCase::new(4).unwrap(), &params(&[("chi", 1.0), ("beta", 2.0)])).unwrap();
        assert_eq!(m.r1_linear, Expr::Const(1.0));
        assert_eq!(m.r1_tilde.eval_uv(3.0, 1.0).unwrap(), -9.0);
    }

    #[test]
    fn case6_reaction() {
        let m = build_preset(
            PresetCase::new(6).unwrap(),
            &params(&[("chi", 1.0), ("rho", 1.0), ("mu", 1.0), ("kappa", 3.0)]),
        )
        .unwrap();
        assert_eq!(m.r1(2.0, 5.0).unwrap(), -6.0);
    }

    #[test]
    fn beta_below_threshold_rejected() {
        let err = build_preset(PresetCase::new(1).unwrap(), &params(&[("chi", 1.0), ("beta", 1.0)])).unwrap_err();
        assert!(matches!(err, CoeffError::BetaTooSmall { case: 1, beta } if beta == 1.0));
    }

    #[test]
    fn open_beta_cases() {
        let c3 = PresetCase::new(3).unwrap();
        assert!(matches!(
            build_preset(c3, &params(&[("chi", 1.0), ("l", 1.0)])),
            Err(CoeffError::MissingParameter { name: "beta", .. })
        ));
        assert!(build_preset(c3, &params(&[("chi", 1.0), ("l", 1.0), ("beta", 2.0)])).is_err());
        let m = build_preset(c3, &params(&[("chi", 1.0), ("l", 1.0), ("beta", 1.5)])).unwrap();
        assert!((m.a12.eval_uv(4.0, 1.0).unwrap() + 8.0).abs() < 1e-14);
    }

    #[test]
    fn missing_parameters_named() {
        assert!(matches!(
            build_preset(PresetCase::new(2).unwrap(), &params(&[("chi", 1.0)])),
            Err(CoeffError::MissingParameter { case: 2, name: "l" })
        ));
        assert!(matches!(
            build_preset(PresetCase::new(1).unwrap(), &params(&[])),
            Err(CoeffError::MissingParameter { name: "chi", .. })
        ));
    }

    #[test]
    fn preset_names() {
        assert_eq!(PresetCase::from_name("case5").unwrap().id(), 5);
        assert!(PresetCase::from_name("case7").is_err());
        assert!(PresetCase::from_name("heat").is_err());
    }

    #[test]
    fn all_presets_satisfy_model_invariants() {
        let full = params(&[("chi", 1.0), ("l", 1.0), ("rho", 1.0), ("mu", 1.0), ("kappa", 3.0)]);
        for id in 1..=6 {
            let mut p = full.clone();
            if matches!(id, 3 | 5) {
                p.insert("beta".into(), 1.75);
            }
            let m = build_preset(PresetCase::new(id).unwrap(), &p).unwrap();
            m.validate_on_box((0.0, 10.0), (0.01, 10.0), 41).unwrap();
        }
    }
}
