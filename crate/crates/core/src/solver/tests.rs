use super::*;
use crate::coeffs::{build_preset, Params, PresetCase};
use crate::exprs::parse;
use std::f64::consts::{E, PI};

fn case2() -> CoefficientModel {
    let params: Params = [("chi".to_string(), 1.0), ("l".to_string(), 1.0)].into();
    build_preset(PresetCase::new(2).unwrap(), &params).unwrap()
}

fn state(grid: &Grid, u: impl Fn(f64, f64) -> f64, v: impl Fn(f64, f64) -> f64) -> SimState {
    SimState {
        t: 0.0,
        u: Field::from_fn(grid, u),
        v: Field::from_fn(grid, v),
    }
}

fn tight() -> LinearTolerances {
    LinearTolerances {
        tol: 1e-13,
        max_iter: None,
    }
}

#[test]
fn constant_v_is_steady() {
    let g = Grid::new_1d(32, 1.0).unwrap();
    let s = state(&g, |x, _| 1.0 + x, |_, _| 3.0);
    let v = step_v(&s, &CoefficientModel::heat(), 0.01, &tight(), None).unwrap();
    assert!(v.values().iter().all(|x| (x - 3.0).abs() <= 1e-13));
}

#[test]
fn implicit_absorption_matches_scalar_oracle() {
    let g = Grid::new_1d(16, 1.0).unwrap();
    let m = CoefficientModel::from_strings(0.0, "1", "0", "1", "1", "0", "0", "-v", "0").unwrap();
    let s = state(&g, |_, _| 1.0, |_, _| 2.0);
    let dt = 0.05;
    let v = step_v(&s, &m, dt, &tight(), None).unwrap();
    for x in v.values() {
        assert!((x - 2.0 / (1.0 + dt)).abs() <= 1e-13);
        assert!((x - 2.0 * (-dt).exp()).abs() <= 2.0 * dt * dt);
    }
}

#[test]
fn backward_euler_heat_mode_decay() {
    let g = Grid::new_1d(128, 1.0).unwrap();
    let cfg = SimConfig::new(
        g,
        CoefficientModel::heat(),
        parse("2 + cos(pi*x)").unwrap(),
        parse("1").unwrap(),
        1e-4,
        0.1,
    );
    let traj = run(&cfg).unwrap();
    let end = traj.final_state();
    let exact = Field::from_fn(&g, |x, _| 2.0 + (-PI * PI * 0.1).exp() * (PI * x).cos());
    assert!(end.u.sub(&exact).max_abs() < 2e-3);
    assert_eq!(end.t, 0.1);
}

#[test]
fn zero_u_stays_zero() {
    let g = Grid::new_1d(32, 1.0).unwrap();
    let s = state(&g, |_, _| 0.0, |x, _| 1.0 + x * x);
    let m = case2();
    let v = step_v(&s, &m, 1e-3, &tight(), None).unwrap();
    let up = step_u(&s, &v, &m, 1e-3, &tight(), None, DEFAULT_CLIP_BUDGET).unwrap();
    assert_eq!(up.u.max_abs(), 0.0);
    assert_eq!(up.clipped, 0.0);
}

#[test]
fn case2_mass_change_equals_reaction() {
    let g = Grid::new_1d(64, 1.0).unwrap();
    let m = case2();
    let s = state(&g, |x, _| 1.0 + 0.5 * (PI * x).cos(), |x, _| 1.0 + 0.3 * x);
    let dt = 1e-4;
    let v = step_v(&s, &m, dt, &LinearTolerances::default(), None).unwrap();
    let up = step_u(&s, &v, &m, dt, &LinearTolerances::default(), None, DEFAULT_CLIP_BUDGET).unwrap();
    let r1 = Field::from_vec(
        &g,
        (0..g.cells())
            .map(|c| m.r1(s.u.values()[c], v.values()[c]).unwrap())
            .collect(),
    )
    .unwrap();
    let change = up.u.integral() - s.u.integral();
    assert_eq!(up.clipped, 0.0);
    assert!((change - dt * r1.integral()).abs() <= 1e-12 * s.u.integral());
}

#[test]
fn conservation_without_reactions() {
    let g = Grid::new_2d(16, 12, 1.0, 0.8).unwrap();
    let m = CoefficientModel::from_strings(1.0, "1 + v", "-u*v", "1 + v", "1", "0", "0", "0", "0").unwrap();
    let cfg = SimConfig::new(
        g,
        m,
        parse("1 + 0.5*cos(pi*x)*cos(2*y)").unwrap(),
        parse("2 + sin(3*x*y)").unwrap(),
        2e-4,
        0.02,
    )
    .with_output_every(10);
    let traj = run(&cfg).unwrap();
    let d0 = traj.diagnostics[0];
    for d in &traj.diagnostics {
        assert!((d.mass_u - d0.mass_u).abs() <= 1e-12 * d0.mass_u);
        assert!((d.mass_v - d0.mass_v).abs() <= 1e-12 * d0.mass_v);
        assert_eq!(d.clipped_mass, 0.0);
    }
    assert!(traj.diagnostics.windows(2).all(|w| w[0].t < w[1].t));
    assert_eq!(traj.snapshots.len(), 11);
}

#[test]
fn case2_min_v_respects_comparison_bound() {
    let g = Grid::new_1d(64, 1.0).unwrap();
    let cfg = SimConfig::new(
        g,
        case2(),
        parse("1 + 0.5*cos(pi*x)").unwrap(),
        parse("1 + 0.2*x").unwrap(),
        1e-3,
        0.5,
    );
    let traj = run(&cfg).unwrap();
    let max_u = traj.diagnostics.iter().map(|d| d.max_u).fold(0.0, f64::max);
    let min_v0 = traj.diagnostics[0].min_v;
    for d in &traj.diagnostics {
        assert!(d.min_v > 0.0);
        assert!(d.min_v >= min_v0 * (-max_u * d.t).exp() - 1e-10);
    }
    let l = &traj.ledger;
    assert!((traj.final_state().u.integral() - l.expected_mass()).abs() <= 1e-12 * l.initial);
}

#[test]
fn runs_are_bit_identical() {
    let g = Grid::new_2d(10, 10, 1.0, 1.0).unwrap();
    let cfg = SimConfig::new(
        g,
        case2(),
        parse("1 + 0.5*cos(pi*x)*cos(pi*y)").unwrap(),
        parse("1 + 0.2*x*y").unwrap(),
        1e-3,
        0.02,
    );
    assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
}

#[test]
fn degenerate_region_is_inert() {
    let g = Grid::new_1d(40, 1.0).unwrap();
    let m = CoefficientModel::from_strings(2.0, "1", "0", "1", "1", "0", "0", "0", "0").unwrap();
    let s = state(&g, |x, _| if x > 0.5 { 1.0 } else { 0.0 }, |_, _| 1.0);
    let v = s.v.clone();
    let up = step_u(&s, &v, &m, 1e-4, &tight(), None, DEFAULT_CLIP_BUDGET).unwrap();
    // cells whose both neighbours are empty see zero mobility on both faces
    for c in 0..18 {
        assert_eq!(up.u.values()[c], 0.0);
    }
    assert!(up.u.values()[19] > 0.0);
}

#[test]
fn clipping_budget_is_enforced() {
    let g = Grid::new_1d(16, 1.0).unwrap();
    let m = CoefficientModel::from_strings(0.0, "1", "0", "1", "1", "0", "-1", "0", "0").unwrap();
    let s = state(&g, |_, _| 1.0, |_, _| 1.0);
    let err = step_u(&s, &s.v, &m, 2.0, &tight(), None, DEFAULT_CLIP_BUDGET).unwrap_err();
    assert!(err.to_string().contains("positivity budget exceeded"));
}

#[test]
fn run_errors_carry_step_and_time() {
    let g = Grid::new_1d(8, 1.0).unwrap();
    let m = CoefficientModel::from_strings(0.0, "1", "0", "1", "1", "0", "-1", "0", "0").unwrap();
    let cfg = SimConfig::new(g, m, parse("0.12").unwrap(), parse("1").unwrap(), 0.05, 1.0);
    match run(&cfg).unwrap_err() {
        SolverError::AtStep { step, t, source } => {
            assert_eq!(step, 3);
            assert!((t - 0.15).abs() < 1e-15);
            assert!(matches!(*source, SolverError::PositivityBudget { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn config_validation() {
    let g = Grid::new_1d(8, 1.0).unwrap();
    let m = CoefficientModel::heat();
    let base = SimConfig::new(g, m, parse("1").unwrap(), parse("1").unwrap(), 0.1, 1.0);
    assert!(base.validate().unwrap().is_empty());
    let mut bad = base.clone();
    bad.dt = 0.0;
    assert!(bad.validate().is_err());
    let mut bad = base.clone();
    bad.t_end = 0.05;
    assert!(bad.validate().is_err());
    let mut bad = base.clone();
    bad.u0 = parse("0").unwrap();
    assert!(bad.validate().is_err());
    let mut bad = base.clone();
    bad.v0 = parse("x - 0.5").unwrap();
    assert!(bad.validate().is_err());
    assert_eq!(
        SimConfig {
            t_end: 0.25,
            ..base.clone()
        }
        .step_count(),
        3
    );
    assert_eq!(base.step_count(), 10);
}

#[test]
fn cross_term_step_guidance_warns() {
    let g = Grid::new_1d(64, 1.0).unwrap();
    let cfg = SimConfig::new(g, case2(), parse("1").unwrap(), parse("1 + 5*x").unwrap(), 0.01, 0.02);
    let w = cfg.validate().unwrap();
    assert_eq!(w.len(), 1);
    assert!(w[0].contains("cross-diffusion"));
}

#[test]
fn f_energy_constant_states() {
    let g = Grid::new_2d(4, 4, 1.0, 2.0).unwrap();
    let s = state(&g, |_, _| 1.0, |_, _| 1.0);
    assert!((f_energy(&s, 3.0, 2.0) - 4.0 * 2.0 / 6.0).abs() < 1e-14);
    let s = state(&g, |_, _| E, |_, _| 1.5);
    let expected = E * 2.0 + 4.0 * 1.5f64.powi(3) * 2.0 / 6.0;
    assert!((f_energy(&s, 3.0, 2.0) - expected).abs() < 1e-13);
    let s = state(&g, |_, _| 0.0, |_, _| 1.0);
    assert!((f_energy(&s, 1.0, 0.0)).abs() == 0.0);
}

#[test]
fn diagnostics_csv_layout() {
    let g = Grid::new_1d(8, 1.0).unwrap();
    let s = state(&g, |_, _| 1.0, |_, _| 1.0);
    let recs = [
        DiagnosticRecord::of(&s, 0.0, 0.0, None),
        DiagnosticRecord::of(&s, 0.0, 0.0, Some(EnergyParams { gamma: 1.0, ks: 1.0 })),
    ];
    let mut buf = Vec::new();
    write_diagnostics_csv(&recs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], DIAGNOSTICS_HEADER);
    assert_eq!(lines[1].split(',').count(), 11);
    assert_eq!(lines[1].split(',').nth(9), Some(""));
    assert_ne!(lines[2].split(',').nth(9), Some(""));
}

#[test]
fn forcing_vanishes_for_constants() {
    let (s1, s2) = mms_forcing(&parse("2").unwrap(), &parse("3").unwrap(), &CoefficientModel::heat()).unwrap();
    assert_eq!(s1.as_const(), Some(0.0));
    assert_eq!(s2.as_const(), Some(0.0));
}

#[test]
fn heat_forcing_matches_hand_derivative() {
    let u = parse("exp(-t)*cos(pi*x)").unwrap();
    let (s1, _) = mms_forcing(&u, &parse("1").unwrap(), &CoefficientModel::heat()).unwrap();
    for k in 0..20 {
        let (x, t) = (k as f64 / 19.0, 0.1 * k as f64);
        let b = Bindings::new().with(Var::X, x).with(Var::T, t);
        let hand = (PI * PI - 1.0) * (-t).exp() * (PI * x).cos();
        assert!((s1.eval(&b).unwrap() - hand).abs() <= 1e-10);
    }
}

#[test]
fn case2_forcing_matches_finite_differences() {
    use rand::{Rng, SeedableRng};
    let m = case2();
    let us = parse("1.5 + 0.5*cos(pi*x)*exp(-t)").unwrap();
    let vs = parse("2 + cos(pi*x)*exp(-t)").unwrap();
    let (s1, s2) = mms_forcing(&us, &vs, &m).unwrap();
    let ev = |e: &Expr, x: f64, t: f64| e.eval(&Bindings::new().with(Var::X, x).with(Var::T, t)).unwrap();
    let h = 1e-4;
    // residual from nested central differences of the flux
    let flux_u = |x: f64, t: f64| {
        let (u, v) = (ev(&us, x, t), ev(&vs, x, t));
        let du = (ev(&us, x + h, t) - ev(&us, x - h, t)) / (2.0 * h);
        let dv = (ev(&vs, x + h, t) - ev(&vs, x - h, t)) / (2.0 * h);
        m.a11(u, v).unwrap() * du + m.a12.eval_uv(u, v).unwrap() * dv
    };
    let flux_v = |x: f64, t: f64| {
        let (u, v) = (ev(&us, x, t), ev(&vs, x, t));
        let dv = (ev(&vs, x + h, t) - ev(&vs, x - h, t)) / (2.0 * h);
        m.a22.eval_uv(u, v).unwrap() * dv
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (x, t) = (rng.gen_range(0.05..0.95), rng.gen_range(0.0..1.0));
        let (u, v) = (ev(&us, x, t), ev(&vs, x, t));
        let ut = (ev(&us, x, t + h) - ev(&us, x, t - h)) / (2.0 * h);
        let vt = (ev(&vs, x, t + h) - ev(&vs, x, t - h)) / (2.0 * h);
        let r1 = ut - (flux_u(x + h, t) - flux_u(x - h, t)) / (2.0 * h) - m.r1(u, v).unwrap();
        let r2 = vt - (flux_v(x + h, t) - flux_v(x - h, t)) / (2.0 * h) - m.r2(u, v).unwrap();
        assert!((ev(&s1, x, t) - r1).abs() <= 1e-5 * r1.abs().max(1.0));
        assert!((ev(&s2, x, t) - r2).abs() <= 1e-5 * r2.abs().max(1.0));
    }
}

#[test]
fn heat_mms_orders() {
    let study = ConvergenceStudy {
        model: CoefficientModel::heat(),
        solution: Manufactured {
            u_star: parse("2 + exp(-t)*cos(pi*x)").unwrap(),
            v_star: parse("2 + exp(-t)*cos(pi*x)").unwrap(),
        },
        dim: 1,
        length: 1.0,
        levels: vec![16, 32, 64],
        dt_factor: 1.0,
        t_end: 0.1,
        linear: tight(),
    };
    let rows = study.run().unwrap();
    for r in &rows[1..] {
        let (oh, ot) = (r.order_h_u.unwrap(), r.order_dt_u.unwrap());
        assert!((1.8..=2.2).contains(&oh), "{r:?}");
        assert!((0.8..=1.2).contains(&ot), "{r:?}");
    }
}
