//! Algebraic power inequalities behind the dissipation estimate.

use crate::exprs::power;

/// `a^e - b^e` without cancellation when `a` and `b` are close.
fn power_difference(a: f64, b: f64, e: f64) -> f64 {
    let (hi, lo, sign) = if a >= b { (a, b, 1.0) } else { (b, a, -1.0) };
    if lo > 0.0 && hi < 1.5 * lo {
        sign * power(lo, e) * (e * ((hi - lo) / lo).ln_1p()).exp_m1()
    } else {
        power(a, e) - power(b, e)
    }
}

/// `(u1^(1+alpha) - u2^(1+alpha)) (u1 - u2)`, non-negative for `u1, u2 >= 0`.
pub fn dissipation_density(u1: f64, u2: f64, alpha: f64) -> f64 {
    power_difference(u1, u2, 1.0 + alpha) * (u1 - u2)
}

/// Sharp constant `C(alpha) = (1 + alpha/2)^2 / (1 + alpha)`.
pub fn power_gap_constant(alpha: f64) -> f64 {
    let g = 1.0 + alpha / 2.0;
    g * g / (1.0 + alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerGap {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `(u1^(1+alpha/2) - u2^(1+alpha/2))^2 <= C(alpha) D(u1, u2)`.
pub fn power_gap_inequality_check(u1: f64, u2: f64, alpha: f64) -> PowerGap {
    let g = 1.0 + alpha / 2.0;
    let gap = power_difference(u1, u2, g);
    let lhs = gap * gap;
    let rhs = power_gap_constant(alpha) * dissipation_density(u1, u2, alpha);
    PowerGap {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12 * rhs,
    }
}

/// `(u1^(1+alpha) - u2^(1+alpha))^2 <= (1+alpha) M^alpha D(u1, u2)` for
/// `0 <= u1, u2 <= M`, with `1e-12` absolute and relative slack.
pub fn mean_power_bounds_check(u1: f64, u2: f64, alpha: f64, bound_m: f64) -> bool {
    let e = 1.0 + alpha;
    let diff = power_difference(u1, u2, e);
    let lhs = diff * diff;
    let bound = e * power(bound_m, alpha) * dissipation_density(u1, u2, alpha);
    lhs <= bound * (1.0 + 1e-12) + 1e-12
}
