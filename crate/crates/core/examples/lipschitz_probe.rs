//! Probe the finite (gamma, 1)-Lipschitz property of a few functions on [0, 1]^2.

use crossdiff::coeffs::{check_finite_gamma_lipschitz, LipschitzOptions};
use crossdiff::parse;

fn main() {
    let opts = LipschitzOptions::default();
    for (f, gamma) in [
        ("y^1.5", 1.5),
        ("y^0.5", 1.5),
        ("y^2*v", 1.5),
        ("v", 1.5),
        ("y*v^2", 2.0),
    ] {
        let e = parse(f).unwrap();
        let r = check_finite_gamma_lipschitz(&e, gamma, 1.0, 1.0, &opts).unwrap();
        println!(
            "{f:>8}  gamma = {gamma}  verdict = {:?}  constant ~ {:.4e}  witness = ({:.3e}, {:.3e}) / ({:.3e}, {:.3e})",
            r.verdict,
            r.estimated_constant,
            r.witness_pair.0.y,
            r.witness_pair.0.z,
            r.witness_pair.1.y,
            r.witness_pair.1.z
        );
    }
}
