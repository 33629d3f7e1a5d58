//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

mod support;

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use crossdiff::cli::{load_config, Command, RunConfig};
use crossdiff::coeffs::{
    build_preset, check_finite_gamma_lipschitz, mean_power_bounds_check, power_gap_inequality_check, LipschitzOptions,
    Params, PresetCase, Verdict,
};
use crossdiff::poisson::{cosine_mode_errors, poincare_ratio, solve_neumann_zero_mean, PoissonOptions};
use crossdiff::solver::{ConvergenceStudy, LinearTolerances, Manufactured, SimConfig, Simulation};
use crossdiff::stability::{
    energy_identity_check, fit_exponential_rate, perturbation_sweep, run_pair, PairOptions, PerturbationShape,
};
use crossdiff::{parse, CoefficientModel, Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (
        e < limit,
        format!("{:.2}s (limit {}s)", e.as_secs_f64(), limit.as_secs()),
    )
}

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn shipped(name: &str) -> RunConfig {
    load_config(&configs_dir().join(name)).expect("shipped config")
}

fn case2(chi: f64, l: f64) -> CoefficientModel {
    let params: Params = [("chi".to_string(), chi), ("l".to_string(), l)].into();
    build_preset(PresetCase::new(2).unwrap(), &params).unwrap()
}

fn heat_config(n: usize, dt: f64, t_end: f64) -> SimConfig {
    SimConfig::new(
        Grid::new_1d(n, 1.0).unwrap(),
        CoefficientModel::heat(),
        parse("2").unwrap(),
        parse("1").unwrap(),
        dt,
        t_end,
    )
}

fn poisson_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut grids: Vec<Grid> = [2, 5, 16, 32].iter().map(|&n| Grid::new_1d(n, 1.0).unwrap()).collect();
    grids.push(Grid::new_1d(32, 3.0).unwrap());
    grids.push(Grid::new_2d(8, 8, 1.0, 1.0).unwrap());
    grids.push(Grid::new_2d(32, 16, 2.0, 1.0).unwrap());
    grids.push(Grid::new_2d(32, 32, 1.0, 1.0).unwrap());
    let mut oracle_err: f64 = 0.0;
    for g in &grids {
        let w = Field::from_vec(g, (0..g.cells()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let cg = solve_neumann_zero_mean(g, &w, &PoissonOptions::with_tol(1e-14)).map_err(|e| e.to_string())?;
        let dense = support::dense::dense_pinned_potential(g, &w);
        for (a, b) in cg.psi.values().iter().zip(&dense) {
            oracle_err = oracle_err.max((a - b).abs());
        }
    }
    let rows = cosine_mode_errors(&[32, 64, 128, 256], 1.0, 1e-12).map_err(|e| e.to_string())?;
    let (_, h0, e0) = rows[2];
    let (_, h1, e1) = rows[3];
    let order = (e0 / e1).ln() / (h0 / h1).ln();
    let (fast, time) = within_time(start, Duration::from_secs(5));
    check(
        oracle_err <= 1e-10 && e1 <= 5e-4 && (order - 2.0).abs() <= 0.2 && fast,
        format!("dense max diff {oracle_err:.2e}, eigen error {e1:.3e} at n=256, order {order:.3}, {time}"),
    )
}

fn algebraic_inequalities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..100_000 {
        let (a, b) = (rng.gen_range(0.0..=10.0), rng.gen_range(0.0..=10.0));
        let alpha = rng.gen_range(0.0..=4.0);
        if !power_gap_inequality_check(a, b, alpha).holds {
            violations += 1;
        }
        if !mean_power_bounds_check(a, b, alpha, 10.0) {
            violations += 1;
        }
    }
    let (fast, time) = within_time(start, Duration::from_secs(1));
    check(
        violations == 0 && fast,
        format!("{violations} violations in 1e5 samples, {time}"),
    )
}

/// Steps to the end, returning the smallest `min v` over every step.
fn min_v_over_run(cfg: &SimConfig) -> Result<(f64, Simulation), String> {
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let mut min_v = sim.state().v.min();
    while !sim.is_finished() {
        sim.advance().map_err(|e| e.to_string())?;
        min_v = min_v.min(sim.state().v.min());
    }
    Ok((min_v, sim))
}

fn conservation_and_positivity() -> Outcome {
    let model = CoefficientModel::from_strings(1.0, "v", "u^2*v", "1", "1", "0", "0", "0", "0").unwrap();
    let cfg = SimConfig::new(
        Grid::new_1d(64, 1.0).unwrap(),
        model,
        parse("1 + 0.5*cos(pi*x)").unwrap(),
        parse("1 + 0.4*cos(pi*x)").unwrap(),
        1e-5,
        1e-2,
    );
    let mut sim = Simulation::new(&cfg).map_err(|e| e.to_string())?;
    let m0 = sim.state().u.integral();
    let mut drift: f64 = 0.0;
    for _ in 0..1000 {
        sim.advance().map_err(|e| e.to_string())?;
        drift = drift.max((sim.state().u.integral() - m0).abs());
    }
    let mut ok = drift <= 1e-12 * m0;
    let mut detail = format!("mass drift {:.2e} relative over 1000 steps", drift / m0);

    let mut worst_clip: f64 = 0.0;
    let mut entries: Vec<_> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let rc = load_config(&path).map_err(|e| e.to_string())?;
        if rc.command != Command::Run {
            continue;
        }
        let cfg = rc.sim_config();
        let (min_v, sim) = min_v_over_run(&cfg)?;
        let clip = sim.ledger().clipped / sim.ledger().initial;
        worst_clip = worst_clip.max(clip);
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        if name.starts_with("case2") || name.starts_with("case4") {
            let reaches = cfg.t_end >= 1.0 - 1e-12;
            ok &= min_v > 0.0 && (reaches || !["case2_1d", "case4_2d"].contains(&name.as_str()));
            detail.push_str(&format!(", {name} min v {min_v:.4} to T={}", cfg.t_end));
        }
    }
    ok &= worst_clip <= 1e-10;
    detail.push_str(&format!(", worst clipped/initial mass {worst_clip:.2e}"));
    check(ok, detail)
}

fn mms_convergence() -> Outcome {
    let start = Instant::now();
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
    let mut orders = Vec::new();
    let heat = study.run().map_err(|e| e.to_string())?;
    study.model = case2(1.0, 1.0);
    study.solution = Manufactured {
        u_star: parse("1.5 + 0.5*exp(-t)*cos(pi*x)").unwrap(),
        v_star: parse("2 + exp(-t)*cos(pi*x)").unwrap(),
    };
    let coupled = study.run().map_err(|e| e.to_string())?;
    for r in heat.iter().chain(&coupled) {
        for (h, t) in [(r.order_h_u, r.order_dt_u), (r.order_h_v, r.order_dt_v)] {
            if let (Some(h), Some(t)) = (h, t) {
                orders.push((h, t));
            }
        }
    }
    let spatial_ok = orders.iter().all(|&(h, _)| (1.8..=2.2).contains(&h));
    let temporal_ok = orders.iter().all(|&(_, t)| (0.8..=1.2).contains(&t));
    let (h_lo, h_hi) = orders
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &(h, _)| (a.min(h), b.max(h)));
    let (t_lo, t_hi) = orders
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &(_, t)| (a.min(t), b.max(t)));
    let (fast, time) = within_time(start, Duration::from_secs(120));
    check(
        spatial_ok && temporal_ok && orders.len() == 8 && fast,
        format!("spatial orders [{h_lo:.3}, {h_hi:.3}], temporal orders [{t_lo:.3}, {t_hi:.3}], {time}"),
    )
}

fn energy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for grid in [Grid::new_1d(48, 1.0).unwrap(), Grid::new_2d(12, 10, 1.0, 2.0).unwrap()] {
        let mut du = Vec::new();
        let mut psi = Vec::new();
        let mut cur: Vec<f64> = (0..grid.cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..40 {
            cur.iter_mut().for_each(|c| *c = 0.9 * *c + rng.gen_range(-0.1..0.1));
            let f = Field::from_vec(&grid, cur.clone()).unwrap();
            psi.push(
                solve_neumann_zero_mean(&grid, &f, &PoissonOptions::with_tol(1e-14))
                    .map_err(|e| e.to_string())?
                    .psi,
            );
            du.push(f);
        }
        let id = energy_identity_check(&du, &psi, 1).map_err(|e| e.to_string())?;
        ok &= id.holds(1e-10);
        worst = worst.max(id.residual / (1.0 + id.lhs.abs()));
    }
    let cfg = heat_config(128, 1e-4, 0.1);
    let report = run_pair(
        &cfg,
        &parse("2 + 0.01*cos(pi*x)").unwrap(),
        &cfg.v0,
        &PairOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let id = report.energy_identity.ok_or("heat pair produced no identity")?;
    ok &= id.holds(1e-10);
    check(
        ok,
        format!(
            "synthetic scaled residual {worst:.2e}, heat pair residual {:.2e} (lhs {:.3e})",
            id.residual, id.lhs
        ),
    )
}

fn uniqueness() -> Outcome {
    let cfg = heat_config(128, 1e-4, 0.1);
    let same = run_pair(&cfg, &cfg.u0, &cfg.v0, &PairOptions::default()).map_err(|e| e.to_string())?;
    let tiny = run_pair(
        &cfg,
        &parse("2 + 1e-8*cos(pi*x)").unwrap(),
        &cfg.v0,
        &PairOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let c2 = shipped("stability_case2.json").sim_config();
    let same_c2 = run_pair(&c2, &c2.u0, &c2.v0, &PairOptions::default()).map_err(|e| e.to_string())?;
    check(
        same.sup_e == 0.0 && same_c2.sup_e == 0.0 && tiny.sup_e <= 1e-12,
        format!(
            "identical data supE {} (heat), {} (case 2); eps=1e-8 supE {:.3e}",
            same.sup_e, same_c2.sup_e, tiny.sup_e
        ),
    )
}

fn stability_scaling() -> Outcome {
    let start = Instant::now();
    let amps = [1e-2, 5e-3, 2.5e-3];
    let rc = shipped("sweep_case2.json");
    let spec = rc.stability.as_ref().unwrap();
    let shape = PerturbationShape {
        du: spec.du.clone(),
        dv: spec.dv.clone(),
    };
    let sim = rc.sim_config();
    assert_eq!((sim.grid.nx(), sim.t_end), (256, 0.5));
    let case2_table =
        perturbation_sweep(&sim, &shape, &amps, &PairOptions::default(), None).map_err(|e| e.to_string())?;

    let heat = heat_config(128, 1e-4, 0.1);
    let heat_shape = PerturbationShape {
        du: parse("cos(pi*x)").unwrap(),
        dv: parse("0").unwrap(),
    };
    let heat_table =
        perturbation_sweep(&heat, &heat_shape, &amps, &PairOptions::default(), None).map_err(|e| e.to_string())?;
    let heat_spread = heat_table.ratio_spread - 1.0;

    let report = run_pair(
        &heat,
        &parse("2 + 0.01*cos(pi*x)").unwrap(),
        &heat.v0,
        &PairOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let hm1: Vec<f64> = report.rows.iter().map(|r| r.comp_hm1).collect();
    let rate = -fit_exponential_rate(&report.times(), &hm1).ok_or("no decay fit")?;
    let rate_err = (rate / (2.0 * PI * PI) - 1.0).abs();

    let (fast, time) = within_time(start, Duration::from_secs(300));
    check(
        case2_table.ratio_spread <= 4.0 && heat_spread.abs() <= 1e-6 && rate_err <= 0.05 && fast,
        format!(
            "case 2 ratio spread {:.6}, heat ratio spread - 1 = {heat_spread:.1e}, decay rate {rate:.4} vs 2pi^2 ({:.2}%), {time}",
            case2_table.ratio_spread,
            100.0 * rate_err
        ),
    )
}

fn lipschitz_calibration() -> Outcome {
    let opts = LipschitzOptions::default();
    let verdict = |f: &str, gamma: f64| check_finite_gamma_lipschitz(&parse(f).unwrap(), gamma, 1.0, 1.0, &opts);
    let mut ok = true;
    let mut detail = Vec::new();
    for gamma in [1.0, 1.5, 2.0, 3.0] {
        let r = verdict(&format!("y^{gamma}"), gamma).map_err(|e| e.to_string())?;
        ok &= (r.estimated_constant - 1.0).abs() <= 1e-3 && r.verdict == Verdict::Plausible;
        detail.push(format!("y^{gamma}: C={:.5}", r.estimated_constant));
    }
    let sqrt = verdict("y^0.5", 1.5).map_err(|e| e.to_string())?;
    ok &= sqrt.verdict == Verdict::Diverging;
    detail.push(format!("y^0.5 (gamma 1.5): {:?}", sqrt.verdict));
    for (f, gamma) in [("y^1.5*v^2", 1.5), ("y^2*v", 1.5), ("y^3*v^1.5", 2.0)] {
        let r = verdict(f, gamma).map_err(|e| e.to_string())?;
        ok &= r.verdict == Verdict::Plausible;
        detail.push(format!("{f} (gamma {gamma}): {:?}", r.verdict));
    }
    check(ok, detail.join(", "))
}

fn symbolic_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (bad, worst) = support::derivative_agreement(&mut rng, 1000, 1e-6);
    check(
        bad == 0,
        format!("{bad} of 1000 pairs disagree, worst relative error {worst:.2e}"),
    )
}

fn poincare() -> Outcome {
    let k1 = poincare_ratio(&Grid::new_1d(128, 1.0).unwrap()).map_err(|e| e.to_string())?;
    let k2 = poincare_ratio(&Grid::new_1d(128, 2.0).unwrap()).map_err(|e| e.to_string())?;
    let err1 = (k1 * PI * PI - 1.0).abs();
    let scale = (k2 / k1 / 4.0 - 1.0).abs();
    check(
        err1 <= 0.02 && scale <= 0.02,
        format!("K(1) pi^2 = {:.5}, K(2)/K(1) = {:.5}", k1 * PI * PI, k2 / k1),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Poisson oracle equivalence", poisson_oracle),
        ("algebraic inequality suite", algebraic_inequalities),
        ("conservation and positivity", conservation_and_positivity),
        ("manufactured-solution convergence", mms_convergence),
        ("discrete energy identity", energy_identity),
        ("uniqueness", uniqueness),
        ("stability scaling", stability_scaling),
        ("Lipschitz checker calibration", lipschitz_calibration),
        ("symbolic derivative vs finite differences", symbolic_derivatives),
        ("Poincare ratio", poincare),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
