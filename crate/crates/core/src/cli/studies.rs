//! Verification studies behind `symaccel verify`, with their pass thresholds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::spec::{quadratic_fixture, RunSpec};
use crate::data;
use crate::error::{Error, Result};
use crate::flows::PhaseState;
use crate::integrators::{self, Scheme, StepperConfig, StoppingRule};
use crate::model::SigmaModel;
use crate::objectives::{grad_check, LogisticRegression, Objective};
use crate::verify;

pub const ORDER_SIGMA: f64 = 2.0;
pub const ORDER_HORIZON: f64 = 2.0;
pub const ORDER_TAUS: [f64; 4] = [0.04, 0.02, 0.01, 0.005];
pub const SYMPLECTIC_TOL: f64 = 1e-6;
pub const SYMPLECTIC_FD_H: f64 = 1e-6;
pub const SYMPLECTIC_STATES: usize = 20;
pub const SYMPLECTIC_SIGMAS: [f64; 3] = [2.0, 4.0, 6.0];
pub const RATE_TAU: f64 = 0.001;
pub const RATE_WINDOW: (f64, f64) = (10.0, 100.0);
pub const GRADCHECK_TOL: f64 = 1e-6;
pub const GRADCHECK_POINTS: usize = 20;
pub const GRADCHECK_H: f64 = 1e-6;
pub const RESIDUAL_RATIO: (f64, f64) = (3.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Order,
    Symplectic,
    Rate,
    Gradcheck,
    Residual,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Order => "order",
            Study::Symplectic => "symplectic",
            Study::Rate => "rate",
            Study::Gradcheck => "gradcheck",
            Study::Residual => "residual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: Study,
    pub passed: bool,
    /// Human-readable pass condition.
    pub criterion: String,
    pub details: serde_json::Value,
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Format(e.to_string()))
}

/// Allowed deviation of the fitted order from the nominal order.
pub fn order_band(scheme: Scheme) -> f64 {
    if scheme.order() >= 4 {
        0.5
    } else {
        0.3
    }
}

/// Fixed-horizon order study on the two-dimensional quadratic fixture.
pub fn order(scheme: Scheme, sigma: f64) -> Result<StudyReport> {
    let model = SigmaModel::new(sigma)?;
    let (q, x0) = quadratic_fixture(2)?;
    let report = verify::order_study(scheme, &model, &q, &x0, ORDER_HORIZON, &ORDER_TAUS)?;
    let expected = f64::from(scheme.order());
    let band = order_band(scheme);
    Ok(StudyReport {
        study: Study::Order,
        passed: (report.fitted_order - expected).abs() <= band,
        criterion: format!("fitted order within {expected} ± {band}"),
        details: to_value(&report)?,
    })
}

/// Random state with `q, p ∈ [-1, 1]^d` and `t ∈ [1, 1.5]`.
pub fn random_phase_state(rng: &mut impl Rng, dim: usize) -> PhaseState {
    let q = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    PhaseState { q, p, t: rng.random_range(1.0..1.5) }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SymplecticCase {
    objective: String,
    sigma: f64,
    max_det_error: f64,
}

/// Largest `|det J - 1|` over random states for each `σ` and both a
/// quadratic and a 20 × 5 logistic objective.
pub fn symplectic(scheme: Scheme, sigmas: &[f64], tau: f64, seed: u64) -> Result<StudyReport> {
    if !scheme.is_symplectic() {
        return Err(Error::config(format!("{scheme} is not a symplectic scheme")));
    }
    let (quad, _) = quadratic_fixture(5)?;
    let logistic = LogisticRegression::from_dataset(&data::synth_logistic(seed, 20, 5, 2.0)?, 1e-3)?;
    let objectives: [(&str, &dyn Objective); 2] = [("quadratic", &quad), ("logistic-20x5", &logistic)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for &sigma in sigmas {
        let model = SigmaModel::new(sigma)?;
        for (name, obj) in objectives {
            let mut worst = 0.0f64;
            for _ in 0..SYMPLECTIC_STATES {
                let state = random_phase_state(&mut rng, obj.dim());
                worst = worst.max(verify::symplecticity_check(scheme, &model, obj, &state, tau, SYMPLECTIC_FD_H)?);
            }
            cases.push(SymplecticCase { objective: name.into(), sigma, max_det_error: worst });
        }
    }
    let passed = cases.iter().all(|c| c.max_det_error <= SYMPLECTIC_TOL);
    Ok(StudyReport {
        study: Study::Symplectic,
        passed,
        criterion: format!("|det J - 1| <= {SYMPLECTIC_TOL:e} for every state"),
        details: serde_json::json!({ "scheme": scheme, "tau": tau, "fd_h": SYMPLECTIC_FD_H, "cases": to_value(&cases)? }),
    })
}

/// Slope of `log |f - f*|` against `log t` for SI2 on the one-dimensional
/// quadratic fixture; passes when the slope is at most `-(σ - ½)`.
pub fn rate(sigma: f64) -> Result<StudyReport> {
    let model = SigmaModel::new(sigma)?;
    let (q, x0) = quadratic_fixture(1)?;
    let steps = ((RATE_WINDOW.1 - model.t0()) / RATE_TAU).round() as usize;
    let trace = integrators::run(
        &model,
        &q,
        &x0,
        &StepperConfig::fixed(Scheme::Si2, RATE_TAU)?,
        &StoppingRule::never(),
        steps,
    )?;
    if trace.stop_reason.is_failure() {
        return Err(Error::Diverged(format!("rate run ended with {}", trace.stop_reason)));
    }
    let fit = verify::rate_fit(&trace, &q, RATE_WINDOW)?;
    let bound = -(sigma - 0.5);
    Ok(StudyReport {
        study: Study::Rate,
        passed: fit.slope <= bound,
        criterion: format!("slope <= {bound}"),
        details: to_value(&fit)?,
    })
}

/// Gradient against central differences at standard-normal points.
pub fn gradcheck(spec: &RunSpec) -> Result<StudyReport> {
    let problem = spec.build_problem()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut worst = 0.0f64;
    for _ in 0..GRADCHECK_POINTS {
        let x: Vec<f64> = (0..problem.x0.len()).map(|_| rng.sample(StandardNormal)).collect();
        worst = worst.max(grad_check(&*problem.objective, &x, GRADCHECK_H)?.max_rel_err);
    }
    Ok(StudyReport {
        study: Study::Gradcheck,
        passed: worst <= GRADCHECK_TOL,
        criterion: format!("relative gradient error <= {GRADCHECK_TOL:e}"),
        details: serde_json::json!({ "problem": problem.name, "points": GRADCHECK_POINTS, "h": GRADCHECK_H, "max_rel_err": worst }),
    })
}

/// ODE residual of SI2 on the quadratic fixture at `τ` and `τ/2`; the ratio
/// should be near 4.
pub fn residual(sigma: f64, tau: f64) -> Result<StudyReport> {
    let model = SigmaModel::new(sigma)?;
    let (q, x0) = quadratic_fixture(2)?;
    let mut values = Vec::new();
    for h in [tau, tau / 2.0] {
        let steps = ((ORDER_HORIZON - model.t0()) / h).round() as usize;
        let trace = integrators::run_recording(
            &model,
            &q,
            &x0,
            &StepperConfig::fixed(Scheme::Si2, h)?,
            &StoppingRule::never(),
            steps,
        )?;
        values.push(verify::ode_residual(&trace, &model, &q)?);
    }
    let ratio = values[0] / values[1];
    Ok(StudyReport {
        study: Study::Residual,
        passed: ratio >= RESIDUAL_RATIO.0 && ratio <= RESIDUAL_RATIO.1,
        criterion: format!("residual ratio in [{}, {}]", RESIDUAL_RATIO.0, RESIDUAL_RATIO.1),
        details: serde_json::json!({ "sigma": sigma, "taus": [tau, tau / 2.0], "residuals": values, "ratio": ratio }),
    })
}
