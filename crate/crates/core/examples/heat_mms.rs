//! Manufactured-solution convergence for the decoupled heat system and a
//! nutrient-taxis model, with `dt` proportional to `h^2`.

use crossdiff::coeffs::{build_preset, Params, PresetCase};
use crossdiff::solver::{ConvergenceStudy, LinearTolerances, Manufactured};
use crossdiff::{parse, CoefficientModel};

fn report(name: &str, study: &ConvergenceStudy) {
    println!("{name}");
    println!(
        "{:>5} {:>11} {:>11} {:>11} {:>8} {:>8}",
        "n", "dt", "err u", "err v", "p_h(u)", "p_dt(u)"
    );
    for r in study.run().unwrap() {
        let f = |o: Option<f64>| o.map(|v| format!("{v:.3}")).unwrap_or_default();
        println!(
            "{:>5} {:>11.3e} {:>11.3e} {:>11.3e} {:>8} {:>8}",
            r.n,
            r.dt,
            r.err_u,
            r.err_v,
            f(r.order_h_u),
            f(r.order_dt_u)
        );
    }
}

fn main() {
    let tight = LinearTolerances {
        tol: 1e-13,
        max_iter: None,
    };
    let mut study = ConvergenceStudy {
        model: CoefficientModel::heat(),
        solution: Manufactured {
            u_star: parse("2 + exp(-t)*cos(pi*x)").unwrap(),
            v_star: parse("2 + exp(-t)*cos(pi*x)").unwrap(),
        },
        dim: 1,
        length: 1.0,
        levels: vec![32, 64, 128],
        dt_factor: 1.0,
        t_end: 0.1,
        linear: tight,
    };
    report("heat", &study);

    let params: Params = [("chi".to_string(), 1.0), ("l".to_string(), 1.0)].into();
    study.model = build_preset(PresetCase::new(2).unwrap(), &params).unwrap();
    study.solution = Manufactured {
        u_star: parse("1.5 + 0.5*exp(-t)*cos(pi*x)").unwrap(),
        v_star: parse("2 + exp(-t)*cos(pi*x)").unwrap(),
    };
    report("case 2", &study);
}
