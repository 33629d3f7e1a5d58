//! Stability ratio `sup E / (||du0||^2 + ||dv0||^2)` across perturbation
//! amplitudes for nutrient-taxis case 2.

use crossdiff::coeffs::{build_preset, Params, PresetCase};
use crossdiff::solver::SimConfig;
use crossdiff::stability::{perturbation_sweep, PairOptions, PerturbationShape};
use crossdiff::{parse, Grid};

fn main() {
    let params: Params = [("chi".to_string(), 1.0), ("l".to_string(), 1.0)].into();
    let model = build_preset(PresetCase::new(2).unwrap(), &params).unwrap();
    let cfg = SimConfig::new(
        Grid::new_1d(128, 1.0).unwrap(),
        model,
        parse("1 + 0.5*cos(pi*x)").unwrap(),
        parse("1 + 0.2*cos(pi*x)").unwrap(),
        2e-5,
        0.5,
    )
    .with_output_every(100);
    let shape = PerturbationShape {
        du: parse("cos(3*pi*x)").unwrap(),
        dv: parse("0").unwrap(),
    };
    let table = perturbation_sweep(&cfg, &shape, &[1e-2, 5e-3, 2.5e-3], &PairOptions::default(), None).unwrap();
    println!("{:>9} {:>12} {:>12} {:>12} {:>10}", "eps", "E0", "Q", "sup E", "ratio");
    for r in &table.rows {
        println!(
            "{:>9.2e} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.6}",
            r.eps, r.e0, r.q, r.sup_e, r.ratio
        );
    }
    println!(
        "ratio spread = {:.6} (bounded by 4: {})",
        table.ratio_spread,
        table.bounded(4.0)
    );
}
