//! Sweep the power-gap inequality `(a^g - b^g)^2 <= C (a^{1+alpha} - b^{1+alpha})(a - b)`
//! with `g = 1 + alpha/2` and report the tightest ratio seen.

use crossdiff::coeffs::{dissipation_density, power_gap_constant, power_gap_inequality_check};

fn main() {
    for alpha in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let mut worst: f64 = 0.0;
        let mut violations = 0;
        for i in 0..=100 {
            for j in 0..=100 {
                let (a, b) = (i as f64 * 0.1, j as f64 * 0.1);
                let gap = power_gap_inequality_check(a, b, alpha);
                if !gap.holds {
                    violations += 1;
                }
                if gap.rhs > 0.0 {
                    worst = worst.max(gap.lhs / gap.rhs);
                }
            }
        }
        println!(
            "alpha = {alpha:3.1}  C = {:.6}  max lhs/rhs = {worst:.6}  violations = {violations}  D(2, 1) = {:.4}",
            power_gap_constant(alpha),
            dissipation_density(2.0, 1.0, alpha)
        );
    }
}
