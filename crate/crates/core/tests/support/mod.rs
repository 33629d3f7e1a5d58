#![allow(dead_code)]

pub mod dense;

use crossdiff::exprs::{add, div, mul, pow, sub, unary, UnaryOp};
use crossdiff::{Expr, Var};
use rand::Rng;

/// Random smooth expression in `u` and `v`, well defined for `u, v > 0`.
/// Arguments of `ln`, `sqrt` and real powers are wrapped as `1 + e^2`, and
/// `exp`, `sin` and `cos` see arguments squashed as `e / (1 + e^2)` so
/// that oscillation stays resolvable by a difference quotient.
pub fn random_smooth_expr<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..3) {
            0 => Expr::Var(Var::U),
            1 => Expr::Var(Var::V),
            _ => Expr::Const((rng.gen_range(-2.0..2.0_f64) * 8.0).round() / 8.0),
        };
    }
    let a = random_smooth_expr(rng, depth - 1);
    let positive = |e: Expr| add(Expr::Const(1.0), mul(e.clone(), e));
    let squash = |e: Expr| div(e.clone(), positive(e));
    match rng.gen_range(0..10) {
        0 => add(a, random_smooth_expr(rng, depth - 1)),
        1 => sub(a, random_smooth_expr(rng, depth - 1)),
        2 => mul(a, random_smooth_expr(rng, depth - 1)),
        3 => div(a, positive(random_smooth_expr(rng, depth - 1))),
        4 => pow(positive(a), rng.gen_range(-1.5..1.5)),
        5 => pow(a, rng.gen_range(1..3) as f64),
        6 => unary(UnaryOp::Exp, squash(a)),
        7 => unary(UnaryOp::Ln, positive(a)),
        8 => unary(UnaryOp::Sqrt, positive(a)),
        _ => unary(if rng.gen_bool(0.5) { UnaryOp::Sin } else { UnaryOp::Cos }, squash(a)),
    }
}

/// Fourth-order central difference of `f` at `x`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Compares symbolic `d/du` and `d/dv` of `n` random expressions against
/// finite differences at random points in `[0.5, 2]^2`. Returns the number of
/// disagreements beyond `rel` and the worst relative error.
pub fn derivative_agreement<R: Rng>(rng: &mut R, n: usize, rel: f64) -> (usize, f64) {
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let e = random_smooth_expr(rng, 4);
        let (u, v) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let var = if k % 2 == 0 { Var::U } else { Var::V };
        let d = e.differentiate(var);
        let sym = d.eval_uv(u, v).expect("derivative defined on the sample box");
        let f = |s: f64| match var {
            Var::U => e.eval_uv(s, v).unwrap(),
            _ => e.eval_uv(u, s).unwrap(),
        };
        let at = if var == Var::U { u } else { v };
        let fd = central_difference(f, at, 1e-3);
        let err = (sym - fd).abs() / sym.abs().max(1.0);
        worst = worst.max(err);
        if !(err <= rel) {
            bad += 1;
            eprintln!("mismatch: d/d{var} of {e} at ({u}, {v}): symbolic {sym}, fd {fd}");
        }
    }
    (bad, worst)
}
