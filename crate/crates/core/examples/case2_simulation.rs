//! Nutrient-taxis case 2 from a compactly supported bump: the degenerate
//! front spreads while mass grows by `l u v` and the nutrient is consumed.

use crossdiff::coeffs::{build_preset, Params, PresetCase};
use crossdiff::solver::{run, SimConfig};
use crossdiff::{parse, Grid};

fn main() {
    let params: Params = [("chi".to_string(), 0.5), ("l".to_string(), 1.0)].into();
    let model = build_preset(PresetCase::new(2).unwrap(), &params).unwrap();
    let grid = Grid::new_1d(200, 1.0).unwrap();
    let u0 = parse("12.5*(abs(0.04 - (x - 0.5)^2) + 0.04 - (x - 0.5)^2)").unwrap();
    let v0 = parse("1 + 0.5*x").unwrap();
    let cfg = SimConfig::new(grid, model, u0, v0, 2e-5, 0.5).with_output_every(2500);
    let traj = run(&cfg).unwrap();
    for w in &traj.warnings {
        println!("warning: {w}");
    }

    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "t", "mass u", "max u", "min v", "|grad v|", "support"
    );
    for (s, d) in traj.snapshots.iter().zip(&traj.diagnostics) {
        let support = s.u.values().iter().filter(|&&x| x > 0.0).count();
        println!(
            "{:>6.3} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>8}",
            d.t, d.mass_u, d.max_u, d.min_v, d.max_grad_v, support
        );
    }
    let l = traj.ledger;
    println!(
        "mass ledger: initial {:.12} + reaction {:.12} + clipped {:.3e} = {:.12} (actual {:.12})",
        l.initial,
        l.reaction,
        l.clipped,
        l.expected_mass(),
        traj.final_state().u.integral()
    );
}
