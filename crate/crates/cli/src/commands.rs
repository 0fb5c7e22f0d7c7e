//! Subcommand key tables and pipelines.

use std::path::PathBuf;

use clap::Command;
use serde_json::{json, Value};

use fhn_lab::checks::{invasion_verdict, run_check, CheckOutcome, Lab, KNOWN_RED};
use fhn_lab::contours::{
    decay_rows, heat_rows, odd_kernel_rows, pointwise_rows, verification_matrix_for, ContourParams, MatrixRow,
    ModelFamily, WakeModel,
};
use fhn_lab::diagnostics::{run_decay_experiment, run_invasion_pair, DecayExperimentConfig, InvasionConfig};
use fhn_lab::dispersion::{solve_spreading_speed, SpreadingOptions, SpreadingSpeed};
use fhn_lab::model::ModelParams;
use fhn_lab::simulate::{run_invasion, Grid, Seed, SimConfig, CSV_HEADER};
use fhn_lab::spectra::{bloch_spectrum, BlochOptions};
use fhn_lab::wavetrain::{continue_in, wavetrain_at_speed, ContinuationParam};

use crate::config::{command, key, optional, run_err, CliError, Config, Key};
use crate::output::{self, plot_script, Output};

pub struct Subcommand {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: fn() -> Vec<Key>,
    pub run: fn(&Config, &mut Output) -> Result<Value, CliError>,
}

pub const SUBCOMMANDS: &[Subcommand] = &[
    Subcommand {
        name: "speed",
        about: "Linear spreading speed and weight from the double root of the dispersion relation",
        keys: speed_keys,
        run: speed,
    },
    Subcommand {
        name: "wavetrain",
        about: "Wave train at the spreading speed, optionally continued in L, c or epsilon",
        keys: wavetrain_keys,
        run: wavetrain,
    },
    Subcommand {
        name: "spectrum",
        about: "Bloch eigencurves of the selected wave train and the stability report",
        keys: spectrum_keys,
        run: spectrum,
    },
    Subcommand {
        name: "simulate",
        about: "Time-step the PDE on a truncated line",
        keys: simulate_keys,
        run: simulate,
    },
    Subcommand {
        name: "diagnose",
        about: "Decay exponents of a perturbed settled front, raw and phase-modulated",
        keys: diagnose_keys,
        run: diagnose,
    },
    Subcommand {
        name: "contours",
        about: "Contour-integral estimates on closed-form model families",
        keys: contours_keys,
        run: contours,
    },
    Subcommand {
        name: "figure1",
        about: "Invasion from positive and negative localized seeds with front fit and wake period",
        keys: figure1_keys,
        run: figure1,
    },
    Subcommand {
        name: "check-all",
        about: "Run the acceptance suite and print the pass/fail matrix",
        keys: check_all_keys,
        run: check_all,
    },
];

pub fn cli() -> Command {
    let mut cmd = Command::new("fhn-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Pulled fronts in the FitzHugh-Nagumo system")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help("Environment: FHN_LAB_THREADS caps the worker threads used for parallel loops.");
    for s in SUBCOMMANDS {
        cmd = cmd.subcommand(command(s.name, s.about, &(s.keys)()));
    }
    cmd
}

pub fn default_out(name: &str) -> PathBuf {
    PathBuf::from("fhn-lab-out").join(name)
}

// ---------------------------------------------------------------------------
// shared pieces

fn model_keys() -> Vec<Key> {
    vec![
        key("a", 0.4, "threshold a in (0, 1/2)"),
        key("gamma", 0.1, "recovery coupling gamma"),
        key("epsilon", 0.005, "time-scale separation epsilon >= 0"),
    ]
}

fn with_model(mut extra: Vec<Key>) -> Vec<Key> {
    let mut k = model_keys();
    k.append(&mut extra);
    k
}

fn params(cfg: &Config) -> Result<ModelParams<f64>, CliError> {
    ModelParams::new(cfg.get("a")?, cfg.get("gamma")?, cfg.get("epsilon")?)
        .map_err(|e| cfg.invalid("model", e.to_string()))
}

fn spreading(p: &ModelParams<f64>) -> Result<SpreadingSpeed<f64>, CliError> {
    solve_spreading_speed(p, None, &SpreadingOptions::default()).map_err(run_err)
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{CSV_HEADER}\n{header}\n");
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:.15e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// speed

fn speed_keys() -> Vec<Key> {
    let d = SpreadingOptions::default();
    with_model(vec![
        key("max_iter", d.max_iter, "Newton iterations"),
        key("tol", format!("{:e}", d.tol), "Newton residual tolerance"),
        key("k_max", d.k_max, "half-width of the spectrum check sweep in k"),
        key("dk", d.dk, "step of the spectrum check sweep"),
    ])
}

fn speed(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let p = params(cfg)?;
    let opts = SpreadingOptions {
        max_iter: cfg.get("max_iter")?,
        tol: cfg.get("tol")?,
        k_max: cfg.get("k_max")?,
        dk: cfg.get("dk")?,
    };
    let ss = solve_spreading_speed(&p, None, &opts).map_err(run_err)?;
    let v = json!({
        "c_lin": ss.c_lin,
        "eta_lin": ss.eta_lin,
        "d10": ss.d10,
        "d02": ss.d02,
        "D_eff_plus": ss.d_eff_plus,
        "residuals": [ss.residuals.0, ss.residuals.1],
        "checks": ss.checks,
    });
    out.write_json("speed.json", &v)?;
    if !(ss.checks.minimal_critical && ss.checks.no_unstable) {
        return Err(CliError::ChecksFailed {
            failed: vec!["speed.checks".into()],
            result: v,
        });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// wavetrain

fn wavetrain_keys() -> Vec<Key> {
    with_model(vec![
        key("n", 256, "collocation points per period"),
        key("speed", "c_lin", "wave-train speed, or c_lin for the spreading speed"),
        key("continue", "none", "continuation parameter: none, L, c or epsilon"),
        optional("to", "end value of the continuation parameter (required with continue)"),
        key("steps", 20, "continuation steps"),
        key("tol", "1e-10", "corrector tolerance during continuation"),
    ])
}

fn wavetrain(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let p = params(cfg)?;
    let c = match cfg.require("speed")? {
        "c_lin" => spreading(&p)?.c_lin,
        _ => cfg.get("speed")?,
    };
    let wt = wavetrain_at_speed(&p, c, cfg.get("n")?).map_err(run_err)?;
    out.write("profile.csv", wt.to_csv())?;
    out.write("plot.py", plot_script(output::PLOT_WAVETRAIN, "wavetrain.png"))?;
    let mut v = json!({
        "L": wt.l,
        "c": wt.c,
        "n": wt.u.len(),
        "residual": wt.residual,
        "newton_history": wt.newton_history,
    });
    let param = match cfg.choice("continue", &["none", "L", "c", "epsilon"])? {
        "none" => None,
        "L" => Some(ContinuationParam::Period),
        "c" => Some(ContinuationParam::Speed),
        _ => Some(ContinuationParam::Epsilon),
    };
    if let Some(param) = param {
        let to: f64 = cfg.get("to")?;
        let from = match param {
            ContinuationParam::Period => wt.l,
            ContinuationParam::Speed => wt.c,
            ContinuationParam::Epsilon => p.epsilon,
        };
        let branch = continue_in(param, (from, to), cfg.get("steps")?, &wt, cfg.get("tol")?).map_err(run_err)?;
        out.write(
            "branch.csv",
            csv_table(
                "L,c,epsilon,residual",
                branch
                    .members
                    .iter()
                    .map(|m| vec![m.l, m.c, m.params.epsilon, m.residual]),
            ),
        )?;
        v["branch"] = json!({
            "param": param,
            "members": branch.members.len(),
            "curve": branch.curve(),
            "stopped": branch.stopped,
        });
    }
    out.write_json("summary.json", &v)?;
    Ok(v)
}

// ---------------------------------------------------------------------------
// spectrum

fn spectrum_keys() -> Vec<Key> {
    let d = BlochOptions::default();
    with_model(vec![
        key("n", 256, "wave-train collocation points"),
        key(
            "n_modes",
            d.n_modes,
            "Fourier modes per component in the Bloch operator",
        ),
        key("n_kappa", d.n_kappa, "Bloch wavenumbers on [0, pi/L]"),
        key("keep", d.keep, "eigenvalues kept per wavenumber"),
        key("strict", d.strict, "fail on the first violated condition"),
    ])
}

fn spectrum(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let p = params(cfg)?;
    let c = spreading(&p)?.c_lin;
    let wt = wavetrain_at_speed(&p, c, cfg.get("n")?).map_err(run_err)?;
    let opts = BlochOptions {
        n_modes: cfg.get("n_modes")?,
        n_kappa: cfg.get("n_kappa")?,
        keep: cfg.get("keep")?,
        strict: cfg.get("strict")?,
        ..Default::default()
    };
    let b = bloch_spectrum(&wt, &p, c, &opts).map_err(run_err)?;
    let keep = b.eigencurves.iter().map(Vec::len).min().unwrap_or(0);
    let header: Vec<String> = std::iter::once("kappa".to_string())
        .chain((0..keep).flat_map(|j| [format!("re_lambda_{j}"), format!("im_lambda_{j}")]))
        .collect();
    let rows = b.kappa_grid.iter().zip(&b.eigencurves).map(|(k, ev)| {
        std::iter::once(*k)
            .chain(ev[..keep].iter().flat_map(|l| [l.re, l.im]))
            .collect::<Vec<_>>()
    });
    out.write("eigencurves.csv", csv_table(&header.join(","), rows))?;
    out.write("plot.py", plot_script(output::PLOT_SPECTRUM, "spectrum.png"))?;
    let r = &b.report;
    let v = json!({
        "no_unstable_spectrum": r.no_unstable_spectrum,
        "quadratic_tangency": r.quadratic_tangency,
        "simple_zero": r.simple_zero,
        "outgoing_group_velocity": r.outgoing_group_velocity,
        "theta": r.theta,
        "c_g": r.c_g,
        "D_eff_wt": r.d_eff_wt,
        "c_g_difference": b.c_g_fd,
        "c_g_fit": b.c_g_fit,
        "translation_eigenvalue": [b.translation_eigenvalue.re, b.translation_eigenvalue.im],
        "spectral_gap": b.spectral_gap,
        "L": b.period,
        "speed": b.speed,
    });
    out.write_json("report.json", &v)?;
    if !r.all() {
        return Err(CliError::ChecksFailed {
            failed: vec!["spectrum.report".into()],
            result: v,
        });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// simulate

fn simulate_keys() -> Vec<Key> {
    with_model(vec![
        key("x0", -600.0, "left end of the domain"),
        key("x1", 600.0, "right end of the domain"),
        key("cells", 4096, "grid cells"),
        key(
            "sponge_width",
            50.0,
            "width of the absorbing layer at the right end (0 for none)",
        ),
        key("sponge_strength", 1.0, "relaxation rate inside the absorbing layer"),
        key("frame_speed", 0.0, "speed of the comoving frame, or c_lin"),
        key("dt", "auto", "time step, or auto for the stability-capped default"),
        key("t_end", 1000.0, "final time"),
        key("output_interval", 100.0, "time between stored snapshots"),
        key("track_interval", 1.0, "time between front-position samples"),
        key("level", "auto", "front-position level, or auto for a/2"),
        key("seed", "localized", "initial data: localized or white_noise"),
        key("seed_amplitude", 0.1, "seed amplitude"),
        key("seed_width", 5.0, "localized seed width"),
        key("seed_center", -550.0, "localized seed center"),
        key("rng_seed", 1, "random seed for white_noise"),
        key("format", "csv", "snapshot format: csv, fhn1 or both"),
    ])
}

fn simulate(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let p = params(cfg)?;
    let mut grid = Grid::new(cfg.get("x0")?, cfg.get("x1")?, cfg.get("cells")?)
        .map_err(|e| cfg.invalid("cells", e.to_string()))?;
    let sw: f64 = cfg.get("sponge_width")?;
    if sw > 0.0 {
        grid = grid
            .with_sponge(sw, cfg.get("sponge_strength")?)
            .map_err(|e| cfg.invalid("sponge_width", e.to_string()))?;
    }
    let frame_speed = match cfg.require("frame_speed")? {
        "c_lin" => spreading(&p)?.c_lin,
        _ => cfg.get("frame_speed")?,
    };
    let amplitude: f64 = cfg.get("seed_amplitude")?;
    let seed = match cfg.choice("seed", &["localized", "white_noise"])? {
        "localized" => Seed::Localized {
            amplitude,
            width: cfg.get("seed_width")?,
            center: cfg.get("seed_center")?,
        },
        _ => {
            let rng_seed: u64 = cfg.get("rng_seed")?;
            out.record_seed(rng_seed);
            Seed::WhiteNoise { amplitude, rng_seed }
        }
    };
    let mut sc = SimConfig::new(p, grid, frame_speed, cfg.get("t_end")?, seed);
    sc.dt = cfg.get_auto("dt")?;
    sc.level = cfg.get_auto("level")?;
    sc.output_interval = cfg.get("output_interval")?;
    sc.track_interval = cfg.get("track_interval")?;
    let format = cfg.choice("format", &["csv", "fhn1", "both"])?.to_string();
    let run = run_invasion(&sc).map_err(run_err)?;

    out.write("front_track.csv", run.front_track_csv())?;
    out.write("norms.csv", run.norms_csv())?;
    if format != "fhn1" {
        for i in 0..run.fields.len() {
            out.write(&format!("snapshots/snapshot_{i:04}.csv"), run.snapshot_csv(i))?;
        }
    }
    if format != "csv" {
        let mut buf = Vec::new();
        run.write_fhn1(&mut buf).map_err(run_err)?;
        out.write("fields.fhn1", buf)?;
    }
    out.write("plot.py", plot_script(output::PLOT_SIMULATE, "simulate.png"))?;
    let v = json!({
        "dt": run.dt,
        "steps": run.steps,
        "cfl": run.cfl,
        "diffusion_number": run.diffusion_number,
        "frame_speed": run.frame_speed,
        "seed": run.seed,
        "snapshots": run.times,
        "final_front": run.front_track.last().map(|&(_, x)| x),
    });
    out.write_json("run.json", &v)?;
    Ok(v)
}

// ---------------------------------------------------------------------------
// diagnose

fn diagnose_keys() -> Vec<Key> {
    let p = ModelParams::new(0.4, 0.1, 0.005).expect("valid");
    let d = DecayExperimentConfig::new(p, 0.0, 0.0, 0.0);
    with_model(vec![
        key("x0", d.x0, "left end of the comoving domain"),
        key("x1", d.x1, "right end of the comoving domain"),
        key("cells", d.cells, "grid cells"),
        key("sponge_width", d.sponge_width, "absorbing layer width"),
        key("sponge_strength", d.sponge_strength, "absorbing layer rate"),
        key(
            "settle_time",
            d.settle_time,
            "duration of the settling run that builds the reference front",
        ),
        key(
            "settle_amplitude",
            d.settle_amplitude,
            "seed amplitude of the settling run",
        ),
        key("settle_width", d.settle_width, "seed width of the settling run"),
        key("amplitude", d.amplitude, "perturbation amplitude"),
        key("width", d.width, "perturbation width"),
        key("offset", d.offset, "perturbation position relative to the front"),
        key("sample_interval", d.sample_interval, "time between norm samples"),
        key("window_lo", d.window.0, "start of the fit window"),
        key("window_hi", d.window.1, "end of the fit window"),
        key("fit_samples", d.fit_samples, "log-spaced samples in the fit"),
        key(
            "envelope_period",
            "auto",
            "envelope period for the sup norms, or auto for L/|c_g|",
        ),
        key(
            "n_modes",
            128,
            "Bloch modes for the auto envelope and the stability cross-reference",
        ),
    ])
}

fn diagnose(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let p = params(cfg)?;
    let ss = spreading(&p)?;
    let wt = wavetrain_at_speed(&p, ss.c_lin, 256).map_err(run_err)?;
    let bloch = bloch_spectrum(
        &wt,
        &p,
        ss.c_lin,
        &BlochOptions {
            n_modes: cfg.get("n_modes")?,
            ..Default::default()
        },
    )
    .map_err(run_err)?;
    let envelope = cfg
        .get_auto("envelope_period")?
        .unwrap_or(bloch.period / bloch.c_g.abs());
    let mut dc = DecayExperimentConfig::new(p, ss.c_lin, ss.eta_lin, envelope);
    dc.x0 = cfg.get("x0")?;
    dc.x1 = cfg.get("x1")?;
    dc.cells = cfg.get("cells")?;
    dc.sponge_width = cfg.get("sponge_width")?;
    dc.sponge_strength = cfg.get("sponge_strength")?;
    dc.settle_time = cfg.get("settle_time")?;
    dc.settle_amplitude = cfg.get("settle_amplitude")?;
    dc.settle_width = cfg.get("settle_width")?;
    dc.amplitude = cfg.get("amplitude")?;
    dc.width = cfg.get("width")?;
    dc.offset = cfg.get("offset")?;
    dc.sample_interval = cfg.get("sample_interval")?;
    dc.window = (cfg.get("window_lo")?, cfg.get("window_hi")?);
    dc.fit_samples = cfg.get("fit_samples")?;
    let ex = run_decay_experiment(&dc, &wt).map_err(run_err)?;

    out.write("unmodulated.csv", ex.unmodulated.to_csv())?;
    out.write("modulated.csv", ex.modulated.to_csv())?;
    out.write(
        "phase.csv",
        csv_table(
            "t,forward_modulated_linf,psi_linf,psi_x_linf,front_shift",
            (0..ex.unmodulated.t.len()).map(|i| {
                vec![
                    ex.unmodulated.t[i],
                    ex.forward_modulated_linf[i],
                    ex.psi_linf[i],
                    ex.psi_x_linf[i],
                    ex.front_shift[i],
                ]
            }),
        ),
    )?;
    out.write("plot.py", plot_script(output::PLOT_DIAGNOSE, "diagnose.png"))?;
    let band = |f: &fhn_lab::diagnostics::DecayFit, target: f64, lo: f64, hi: f64| json!({ "fit": f, "target": target, "within_band": f.within(lo, hi), "band": [lo, hi] });
    let v = json!({
        "exponents": {
            "unmodulated": band(&ex.fits.unmodulated, -0.5, -0.65, -0.35),
            "modulated": band(&ex.fits.modulated, -1.0, -1.25, -0.75),
            "refined": band(&ex.fits.refined, -1.5, -1.75, -1.25),
            "front_shift": ex.fits.front_shift,
        },
        "selected_wavenumber": { "k": 2.0 * std::f64::consts::PI / wt.l, "L": wt.l },
        "envelope_period": envelope,
        "settled_front": ex.settled_front,
        "modulation_constant": ex.modulation_constant,
        "stability": bloch.report,
        "spreading": { "c_lin": ss.c_lin, "eta_lin": ss.eta_lin },
        "seconds": ex.seconds,
    });
    out.write_json("report.json", &v)?;
    Ok(v)
}

// ---------------------------------------------------------------------------
// contours

fn contours_keys() -> Vec<Key> {
    let d = ContourParams::default();
    let m = WakeModel::default();
    vec![
        key(
            "family",
            "all",
            "all, heat, lipschitz, blowup, outgoing, pointwise or odd",
        ),
        key("j", 0, "pointwise kernel: power of |lambda|"),
        key("l", 0, "pointwise kernel: power of |nu(lambda)|"),
        key("m", 0, "pointwise kernel: extra power of |lambda|"),
        key("r", 0.5, "singularity order for blowup and outgoing"),
        key("t_points", 9, "log-spaced times in the fit"),
        key("nu1", m.nu1, "wake model: linear coefficient"),
        key("nu2", m.nu2, "wake model: quadratic coefficient"),
        key("delta", d.delta, "ball radius"),
        key("theta0", d.theta0, "sector half-angle"),
        key("delta_tilde", d.delta_tilde, "sector opening margin"),
        key("c2", d.c2, "parabola curvature"),
        key("a_star", d.a_star, "front contour offset"),
        key("d", d.d, "wake parabola shift"),
        key("wake_a_star", d.wake_a_star, "wake contour offset"),
        key("c_fr3", d.c_fr3, "front region constant"),
        key("c_wt", d.c_wt, "wake region constant"),
        key("end_angle", d.end_angle, "direction of the outer rays"),
        key("delta0", d.delta0, "pointwise saddle clip"),
        key("delta1", d.delta1, "pointwise connector height"),
        key("delta2", d.delta2, "pointwise connector offset"),
    ]
}

fn contours(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let p = ContourParams {
        delta: cfg.get("delta")?,
        theta0: cfg.get("theta0")?,
        delta_tilde: cfg.get("delta_tilde")?,
        c2: cfg.get("c2")?,
        a_star: cfg.get("a_star")?,
        d: cfg.get("d")?,
        wake_a_star: cfg.get("wake_a_star")?,
        c_fr3: cfg.get("c_fr3")?,
        c_wt: cfg.get("c_wt")?,
        end_angle: cfg.get("end_angle")?,
        delta0: cfg.get("delta0")?,
        delta1: cfg.get("delta1")?,
        delta2: cfg.get("delta2")?,
    };
    p.validate().map_err(|e| cfg.invalid("contour", e.to_string()))?;
    let model = WakeModel {
        nu1: cfg.get("nu1")?,
        nu2: cfg.get("nu2")?,
    };
    let n_t: usize = cfg.get("t_points")?;
    let r: f64 = cfg.get("r")?;
    let family = cfg.choice(
        "family",
        &["all", "heat", "lipschitz", "blowup", "outgoing", "pointwise", "odd"],
    )?;
    let rows: Vec<MatrixRow> = match family {
        "all" => verification_matrix_for(&p, &model, n_t, n_t).map_err(run_err)?,
        "heat" => heat_rows().map_err(run_err)?,
        "lipschitz" => decay_rows(
            &ModelFamily::LipschitzBranched {
                u0: 1.0,
                lipschitz: 1.0,
            },
            &p,
            n_t,
        )
        .map_err(run_err)?,
        "blowup" => decay_rows(&ModelFamily::BlowupBranched { r, amplitude: 1.0 }, &p, n_t).map_err(run_err)?,
        "outgoing" => decay_rows(
            &ModelFamily::OutgoingBounded {
                r,
                amplitude: 1.0,
                model,
            },
            &p,
            n_t,
        )
        .map_err(run_err)?,
        "pointwise" => {
            let order = (cfg.get("j")?, cfg.get("l")?, cfg.get("m")?);
            pointwise_rows(&model, order, &p, n_t).map_err(run_err)?
        }
        _ => odd_kernel_rows(model.nu1),
    };
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}: {}", r.estimate, r.quantity))
        .collect();
    let v = json!({ "family": family, "rows": rows, "pass": failed.is_empty() });
    out.write_json("matrix.json", &v)?;
    if !failed.is_empty() {
        return Err(CliError::ChecksFailed { failed, result: v });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// figure1

fn figure1_keys() -> Vec<Key> {
    let d = InvasionConfig::new(ModelParams::new(0.4, 0.1, 0.005).expect("valid"));
    with_model(vec![
        key("x0", d.x0, "left end of the lab-frame domain"),
        key("x1", d.x1, "right end of the lab-frame domain"),
        key("cells", d.cells, "grid cells"),
        key("sponge_width", d.sponge_width, "absorbing layer width"),
        key("sponge_strength", d.sponge_strength, "absorbing layer rate"),
        key("t_end", d.t_end, "final time"),
        key(
            "amplitude",
            d.amplitude,
            "seed amplitude; the second run uses its negative",
        ),
        key("width", d.width, "seed width"),
        key("center", d.center, "seed center"),
        key("fit_lo", d.fit_window.0, "start of the front-position fit"),
        key("fit_hi", d.fit_window.1, "end of the front-position fit"),
        key(
            "wake_far",
            d.wake_behind.0,
            "wake window starts this far behind the front",
        ),
        key(
            "wake_near",
            d.wake_behind.1,
            "wake window ends this far behind the front",
        ),
        key("output_interval", d.output_interval, "time between stored snapshots"),
    ])
}

fn figure1(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let p = params(cfg)?;
    let ss = spreading(&p)?;
    let mut ic = InvasionConfig::new(p);
    ic.x0 = cfg.get("x0")?;
    ic.x1 = cfg.get("x1")?;
    ic.cells = cfg.get("cells")?;
    ic.sponge_width = cfg.get("sponge_width")?;
    ic.sponge_strength = cfg.get("sponge_strength")?;
    ic.t_end = cfg.get("t_end")?;
    ic.amplitude = cfg.get("amplitude")?;
    ic.width = cfg.get("width")?;
    ic.center = cfg.get("center")?;
    ic.fit_window = (cfg.get("fit_lo")?, cfg.get("fit_hi")?);
    ic.wake_behind = (cfg.get("wake_far")?, cfg.get("wake_near")?);
    ic.output_interval = cfg.get("output_interval")?;
    let (pair, runs) = run_invasion_pair(&ic).map_err(run_err)?;
    for (side, run) in ["positive", "negative"].iter().zip(&runs) {
        out.write(&format!("track_{side}.csv"), run.front_track_csv())?;
        if !run.fields.is_empty() {
            out.write(&format!("final_{side}.csv"), run.snapshot_csv(run.fields.len() - 1))?;
        }
    }
    out.write("plot.py", plot_script(output::PLOT_FIGURE1, "figure1.png"))?;
    let (pass, summary) = invasion_verdict(&pair, ss.c_lin, ss.eta_lin);
    let v = json!({
        "pair": serde_json::to_value(&pair).map_err(run_err)?,
        "c_lin": ss.c_lin,
        "log_coefficient_reference": 1.5 / ss.eta_lin,
        "pass": pass,
        "summary": summary,
    });
    out.write_json("pair.json", &v)?;
    if !pass {
        return Err(CliError::ChecksFailed {
            failed: vec!["figure1".into()],
            result: v,
        });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// check-all

fn check_all_keys() -> Vec<Key> {
    with_model(vec![
        key("only", "1,2,3,4,5,6,7,8,9,10", "comma-separated criteria to run"),
        key("format", "text", "stdout format: text or json"),
    ])
}

fn check_all(cfg: &Config, out: &mut Output) -> Result<Value, CliError> {
    let lab = Lab::new(params(cfg)?);
    let mut ids = Vec::new();
    for s in cfg.require("only")?.split(',') {
        let id: u8 = s
            .trim()
            .parse()
            .ok()
            .filter(|i| (1..=10).contains(i))
            .ok_or_else(|| cfg.invalid("only", format!("{s:?} is not a criterion in 1..=10")))?;
        ids.push(id);
    }
    let text = cfg.choice("format", &["text", "json"])? == "text";
    let mut outcomes: Vec<CheckOutcome> = Vec::new();
    for id in ids {
        let o = run_check(id, &lab).expect("id validated");
        if text {
            let tag = if !o.pass && KNOWN_RED.contains(&o.id) {
                "  [known red]"
            } else {
                ""
            };
            println!("{}{tag}", o.line());
        }
        outcomes.push(o);
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id.to_string()).collect();
    let v = json!({ "outcomes": outcomes, "pass": failed.is_empty(), "known_red": KNOWN_RED });
    out.write_json("checks.json", &v)?;
    if text {
        println!("{}/{} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    }
    if !failed.is_empty() {
        return Err(CliError::ChecksFailed { failed, result: v });
    }
    Ok(if text { Value::Null } else { v })
}
