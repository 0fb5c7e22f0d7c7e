//! Frozen values and cross-run invariants at the reference parameters.

use fhn_lab::{
    run_invasion, solve_spreading_speed, wavetrain_at_speed, Grid, Params, Seed, SimConfig, SpreadingOptions,
};

fn reference() -> Params {
    Params::new(0.4, 0.1, 0.005).unwrap()
}

#[test]
fn frozen_spreading_speed() {
    let s = solve_spreading_speed(&reference(), None, &SpreadingOptions::default()).unwrap();
    assert!((s.c_lin - 0.9569880794464294).abs() < 1e-12, "{}", s.c_lin);
    assert!((s.eta_lin - 0.4665176739093448).abs() < 1e-12, "{}", s.eta_lin);
}

#[test]
fn frozen_selected_period() {
    let p = reference();
    let c = solve_spreading_speed(&p, None, &SpreadingOptions::default())
        .unwrap()
        .c_lin;
    let wt = wavetrain_at_speed(&p, c, 256).unwrap();
    assert!((wt.l - 126.6203536).abs() < 1e-6, "L = {}", wt.l);
    assert!(wt.residual < 1e-9);
}

fn short_run(frame_speed: f64, center: f64) -> fhn_lab::simulate::SimulationRun {
    let grid = Grid::new(-150.0, 150.0, 1536).unwrap();
    let seed = Seed::Localized {
        amplitude: 0.1,
        width: 5.0,
        center,
    };
    let mut cfg = SimConfig::new(reference(), grid, frame_speed, 60.0, seed);
    cfg.dt = Some(0.01);
    cfg.output_interval = 60.0;
    run_invasion(&cfg).unwrap()
}

/// The lab-frame front equals the comoving front shifted by `c t`.
#[test]
fn lab_and_comoving_frames_agree() {
    let c = 0.9;
    let lab = short_run(0.0, -100.0);
    let co = short_run(c, -100.0);
    let at = |run: &fhn_lab::simulate::SimulationRun, t: f64| {
        run.front_track
            .iter()
            .find(|(s, _)| (s - t).abs() < 1e-9)
            .map(|&(_, x)| x)
            .unwrap()
    };
    for t in [30.0, 60.0] {
        let (xl, xc) = (at(&lab, t), at(&co, t) + c * t);
        assert!((xl - xc).abs() < 5e-3, "t = {t}: lab {xl}, comoving {xc}");
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let a = short_run(0.5, -100.0);
    let b = short_run(0.5, -100.0);
    assert_eq!(a.front_track_csv(), b.front_track_csv());
    let (fa, fb) = (a.last().unwrap(), b.last().unwrap());
    assert!(fa.u.iter().zip(&fb.u).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(fa.w.iter().zip(&fb.w).all(|(x, y)| x.to_bits() == y.to_bits()));
}
