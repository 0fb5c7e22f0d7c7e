//! The acceptance suite as library functions, shared by the integration test
//! and the `check-all` subcommand.

use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::contours::{verification_matrix, ContourParams};
use crate::diagnostics::{
    run_decay_experiment, run_invasion_pair, DecayExperimentConfig, InvasionConfig, InvasionPair, InvasionRecord,
};
use crate::dispersion::{solve_spreading_speed, SpreadingOptions, SpreadingSpeed};
use crate::model::ModelParams;
use crate::oracle::{eigensolver_oracle, jacobian_fd_error};
use crate::simulate::{advection_oracle_error, heat_oracle_error};
use crate::spectra::{
    bloch_spectrum, essential_spectrum_borders, floquet_expansion, BlochOptions, BlochSpectrum, FloquetOptions,
};
use crate::wavetrain::{wavetrain_at_speed, WaveTrain};

/// Criteria that are expected to fail at desk scale. Each has an analysis in
/// the decisions ledger; the suite still runs and reports them.
pub const KNOWN_RED: &[u8] = &[8];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub summary: String,
    pub details: Value,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<36} {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.seconds
        )
    }
}

/// Shared fixtures at the reference parameters `(a, γ, ε) = (0.4, 0.1, 0.005)`,
/// built on first use.
pub struct Lab {
    pub params: ModelParams<f64>,
    spreading: OnceLock<Result<SpreadingSpeed<f64>, String>>,
    train: OnceLock<Result<WaveTrain, String>>,
    bloch: OnceLock<Result<(BlochSpectrum, f64), String>>,
}

impl Default for Lab {
    fn default() -> Self {
        Self::new(ModelParams::new(0.4, 0.1, 0.005).expect("reference parameters are valid"))
    }
}

impl Lab {
    pub fn new(params: ModelParams<f64>) -> Self {
        Self {
            params,
            spreading: OnceLock::new(),
            train: OnceLock::new(),
            bloch: OnceLock::new(),
        }
    }

    pub fn spreading(&self) -> Result<&SpreadingSpeed<f64>, String> {
        self.spreading
            .get_or_init(|| {
                solve_spreading_speed(&self.params, None, &SpreadingOptions::default()).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn train(&self) -> Result<&WaveTrain, String> {
        self.train
            .get_or_init(|| {
                let c = self.spreading()?.c_lin;
                wavetrain_at_speed(&self.params, c, 256).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Full Bloch spectrum at N = 256 with its wall-clock time.
    pub fn bloch(&self) -> Result<&(BlochSpectrum, f64), String> {
        self.bloch
            .get_or_init(|| {
                let c = self.spreading()?.c_lin;
                let wt = self.train()?;
                let clock = Instant::now();
                let b = bloch_spectrum(wt, &self.params, c, &BlochOptions::default()).map_err(|e| e.to_string())?;
                Ok((b, clock.elapsed().as_secs_f64()))
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

fn outcome(
    id: u8,
    title: &str,
    budget: f64,
    clock: Instant,
    body: Result<(bool, String, Value), String>,
) -> CheckOutcome {
    let seconds = clock.elapsed().as_secs_f64();
    let (pass, summary, details) = match body {
        Ok((p, s, d)) => (p && seconds <= budget, s, d),
        Err(e) => (false, format!("error: {e}"), json!({ "error": e })),
    };
    CheckOutcome {
        id,
        title: title.into(),
        pass,
        seconds,
        budget_seconds: budget,
        summary,
        details,
    }
}

/// 1. KPP limit: `c_lin = 2√(a(1−a))`, `η_lin = √(a(1−a))`.
pub fn spreading_speed_oracle() -> CheckOutcome {
    let clock = Instant::now();
    let body = (|| {
        let p = ModelParams::new(0.4, 0.1, 0.0).map_err(|e| e.to_string())?;
        let ss = solve_spreading_speed(&p, None, &SpreadingOptions::default()).map_err(|e| e.to_string())?;
        let eta = (0.4f64 * 0.6).sqrt();
        let (ec, ee) = ((ss.c_lin - 2.0 * eta).abs(), (ss.eta_lin - eta).abs());
        let pass = ec < 1e-10 && ee < 1e-10 && ss.residuals.0 < 1e-12 && ss.residuals.1 < 1e-12;
        Ok((
            pass,
            format!(
                "c_lin error {ec:.1e}, eta error {ee:.1e}, residuals {:.1e}/{:.1e}",
                ss.residuals.0, ss.residuals.1
            ),
            json!({ "c_lin": ss.c_lin, "eta_lin": ss.eta_lin, "residuals": [ss.residuals.0, ss.residuals.1] }),
        ))
    })();
    outcome(1, "spreading speed oracle", 1.0, clock, body)
}

/// 2. `c_lin(ε) − c_lin(0)` is linear in small ε.
pub fn epsilon_consistency() -> CheckOutcome {
    let clock = Instant::now();
    let body = (|| {
        let speed = |eps: f64| -> Result<f64, String> {
            let p = ModelParams::new(0.4, 0.1, eps).map_err(|e| e.to_string())?;
            Ok(solve_spreading_speed(&p, None, &SpreadingOptions::default())
                .map_err(|e| e.to_string())?
                .c_lin)
        };
        let c0 = speed(0.0)?;
        let eps = [1e-4, 3e-4, 1e-3];
        let dc: Vec<f64> = eps
            .iter()
            .map(|&e| speed(e).map(|c| (c - c0).abs()))
            .collect::<Result<_, _>>()?;
        let k = eps.iter().zip(&dc).map(|(e, d)| e * d).sum::<f64>() / eps.iter().map(|e| e * e).sum::<f64>();
        let mean = dc.iter().sum::<f64>() / dc.len() as f64;
        let ss_res: f64 = eps.iter().zip(&dc).map(|(e, d)| (d - k * e).powi(2)).sum();
        let ss_tot: f64 = dc.iter().map(|d| (d - mean).powi(2)).sum();
        let r2 = 1.0 - ss_res / ss_tot;
        let bounded = eps.iter().zip(&dc).all(|(e, d)| *d <= k * e * 1.05);
        Ok((
            r2 > 0.99 && bounded,
            format!("K = {k:.4}, R^2 = {r2:.6}"),
            json!({ "epsilon": eps, "delta_c": dc, "K": k, "r_squared": r2 }),
        ))
    })();
    outcome(2, "epsilon-perturbation consistency", 5.0, clock, body)
}

/// 3. Diffusive stability of the selected wave train.
pub fn wavetrain_stability(lab: &Lab) -> CheckOutcome {
    let clock = Instant::now();
    let body = lab.bloch().map(|(b, _)| {
        let r = &b.report;
        let pass = r.no_unstable_spectrum
            && r.quadratic_tangency
            && b.theta_fit > 0.0
            && b.translation_eigenvalue.norm() < 1e-6
            && b.spectral_gap > 1e-3;
        (
            pass,
            format!(
                "theta = {:.4}, |lambda_0| = {:.1e}, gap = {:.2e}",
                b.theta_fit,
                b.translation_eigenvalue.norm(),
                b.spectral_gap
            ),
            json!({
                "L": b.period, "theta": b.theta_fit, "translation_eigenvalue": b.translation_eigenvalue.norm(),
                "spectral_gap": b.spectral_gap, "conditions": r,
            }),
        )
    });
    // the spectrum may already be cached by another check; report its own cost
    let mut o = outcome(3, "wave-train diffusive stability", 600.0, clock, body);
    if let Ok((_, s)) = lab.bloch() {
        o.seconds = o.seconds.max(*s);
        o.pass &= *s <= o.budget_seconds;
    }
    o
}

/// 4. Adjoint group velocity against the slope of the critical curve.
pub fn group_velocity_cross_check(lab: &Lab) -> CheckOutcome {
    let clock = Instant::now();
    let body = lab.bloch().map(|(b, _)| {
        let rel = (b.c_g - b.c_g_fd).abs() / b.c_g.abs();
        (
            rel < 1e-4 && b.c_g < 0.0,
            format!(
                "c_g = {:.6} (adjoint), {:.6} (difference), rel {rel:.1e}",
                b.c_g, b.c_g_fd
            ),
            json!({ "c_g": b.c_g, "c_g_fd": b.c_g_fd, "relative": rel }),
        )
    });
    outcome(4, "group velocity cross-check", 600.0, clock, body)
}

/// 5. Floquet-exponent expansion against Bloch quantities.
pub fn floquet_expansion_check(lab: &Lab) -> CheckOutcome {
    let clock = Instant::now();
    let body = (|| {
        let (b, _) = lab.bloch()?;
        let clock = Instant::now();
        let c = lab.spreading()?.c_lin;
        let e = floquet_expansion(lab.train()?, &lab.params, c, 0.01, &FloquetOptions::default())
            .map_err(|e| e.to_string())?;
        let nu1 = -1.0 / b.c_g;
        let nu2 = -b.d_eff_wt / b.c_g.powi(3);
        let (r1, r2) = ((e.nu1 - nu1).abs() / nu1.abs(), (e.nu2 - nu2).abs() / nu2.abs());
        Ok((
            r1 < 1e-3 && r2 < 0.05 && clock.elapsed().as_secs_f64() < 60.0,
            format!("nu1 rel {r1:.1e}, nu2 rel {r2:.1e}"),
            json!({ "nu1": e.nu1, "nu1_expected": nu1, "nu2": e.nu2, "nu2_expected": nu2 }),
        ))
    })();
    outcome(5, "Floquet-exponent expansion", 600.0 + 60.0, clock, body)
}

/// 6. Weighted Fredholm index −2 in small weights.
pub fn fredholm_count(lab: &Lab) -> CheckOutcome {
    let clock = Instant::now();
    let body = (|| {
        let ss = lab.spreading()?;
        let wt = lab.train()?;
        let mut idx = Vec::new();
        for eta in [1e-3, 1e-2] {
            let r = essential_spectrum_borders(&lab.params, ss, wt, (eta, eta), &[0.0], 1, &FloquetOptions::default())
                .map_err(|e| e.to_string())?;
            idx.push(r.report.index);
        }
        Ok((
            idx.iter().all(|&i| i == -2),
            format!("index {idx:?} at eta = 1e-3, 1e-2"),
            json!({ "eta": [1e-3, 1e-2], "index": idx }),
        ))
    })();
    outcome(6, "Fredholm count", 60.0 + 120.0, clock, body)
}

/// Criterion-7 verdict on a finished invasion pair: speed within 2% of
/// `c_lin`, log coefficient within 50% of `3/(2 η_lin)`, a coherent wake on
/// both sides and periods agreeing within 1%.
pub fn invasion_verdict(pair: &InvasionPair, c_lin: f64, eta_lin: f64) -> (bool, String) {
    let b_ref = 1.5 / eta_lin;
    let ok = |r: &InvasionRecord| {
        (r.fit.speed / c_lin - 1.0).abs() < 0.02
            && (r.fit.log_coefficient / b_ref - 1.0).abs() < 0.5
            && r.wake.confidence > 0.5
    };
    (
        ok(&pair.positive) && ok(&pair.negative) && pair.period_mismatch < 0.01,
        format!(
            "speeds {:.4}/{:.4} vs {c_lin:.4}, log coefficients {:.2}/{:.2} vs {b_ref:.2}, L {:.2}/{:.2}",
            pair.positive.fit.speed,
            pair.negative.fit.speed,
            pair.positive.fit.log_coefficient,
            pair.negative.fit.log_coefficient,
            pair.positive.wake.l_sel,
            pair.negative.wake.l_sel
        ),
    )
}

/// 7. Invasion from localized seeds: speed with log delay, selected period.
pub fn invasion_reproduction(lab: &Lab) -> CheckOutcome {
    let clock = Instant::now();
    let body = (|| {
        let ss = lab.spreading()?;
        let (pair, _) = run_invasion_pair(&InvasionConfig::new(lab.params)).map_err(|e| e.to_string())?;
        let (pass, summary) = invasion_verdict(&pair, ss.c_lin, ss.eta_lin);
        Ok((pass, summary, serde_json::to_value(&pair).map_err(|e| e.to_string())?))
    })();
    outcome(7, "invasion from localized seeds", 1800.0, clock, body)
}

/// 8. Decay exponents of a perturbation of the settled front.
pub fn nonlinear_decay(lab: &Lab) -> CheckOutcome {
    let clock = Instant::now();
    let body = (|| {
        let ss = lab.spreading()?;
        let (b, _) = lab.bloch()?;
        let cfg = DecayExperimentConfig::new(lab.params, ss.c_lin, ss.eta_lin, b.period / b.c_g.abs());
        let ex = run_decay_experiment(&cfg, lab.train()?).map_err(|e| e.to_string())?;
        let f = &ex.fits;
        let pass =
            f.unmodulated.within(-0.65, -0.35) && f.modulated.within(-1.25, -0.75) && f.refined.within(-1.75, -1.25);
        Ok((
            pass,
            format!(
                "unmodulated {:.3}, modulated {:.3}, refined {:.3}",
                f.unmodulated.exponent, f.modulated.exponent, f.refined.exponent
            ),
            json!({ "fits": f, "modulation_constant": ex.modulation_constant, "settled_front": ex.settled_front }),
        ))
    })();
    outcome(8, "nonlinear decay exponents", 2700.0, clock, body)
}

/// 9. Contour estimates on model families.
pub fn contour_lab() -> CheckOutcome {
    let clock = Instant::now();
    let body = verification_matrix(&ContourParams::default())
        .map_err(|e| e.to_string())
        .map(|rows| {
            let failed = rows.iter().filter(|r| !r.pass).count();
            let worst = rows
                .iter()
                .filter(|r| r.estimate != "heat_identity" && r.estimate != "odd_kernel")
                .map(|r| (r.fitted - r.predicted).abs())
                .fold(0.0, f64::max);
            (
                failed == 0,
                format!(
                    "{} rows, {failed} failed, worst exponent deviation {worst:.4}",
                    rows.len()
                ),
                json!(rows),
            )
        });
    outcome(9, "contour lab", 600.0, clock, body)
}

/// 10. Eigensolver, scheme and Jacobian oracles.
pub fn kernel_oracles(lab: &Lab) -> CheckOutcome {
    let clock = Instant::now();
    let body = (|| {
        let eig = eigensolver_oracle(&[4, 9, 16, 33, 64], 2024).map_err(|e| e.to_string())?;
        let heat = heat_oracle_error().map_err(|e| e.to_string())?;
        let adv = advection_oracle_error().map_err(|e| e.to_string())?;
        let jac = jacobian_fd_error(&lab.params, 500, 11);
        Ok((
            eig.max_error < 1e-6 && heat < 0.01 && adv < 1e-3 && jac < 1e-6,
            format!(
                "eigen {:.1e}, heat {heat:.1e}, advection {adv:.1e}, jacobian {jac:.1e}",
                eig.max_error
            ),
            json!({ "eigen": eig, "heat_variance_rel": heat, "advection_sup": adv, "jacobian_rel": jac }),
        ))
    })();
    outcome(10, "numerical-kernel oracles", 120.0, clock, body)
}

/// Run one criterion by number.
pub fn run_check(id: u8, lab: &Lab) -> Option<CheckOutcome> {
    Some(match id {
        1 => spreading_speed_oracle(),
        2 => epsilon_consistency(),
        3 => wavetrain_stability(lab),
        4 => group_velocity_cross_check(lab),
        5 => floquet_expansion_check(lab),
        6 => fredholm_count(lab),
        7 => invasion_reproduction(lab),
        8 => nonlinear_decay(lab),
        9 => contour_lab(),
        10 => kernel_oracles(lab),
        _ => return None,
    })
}

pub fn run_all(lab: &Lab) -> Vec<CheckOutcome> {
    (1..=10).filter_map(|i| run_check(i, lab)).collect()
}
