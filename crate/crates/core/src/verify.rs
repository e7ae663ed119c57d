//! Measurements that check the integrators against their claimed
//! properties: convergence order, preservation of phase-space volume,
//! decay rate of the objective gap, and consistency with the ODE.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::PhaseState;
use crate::integrators::{step, Scheme, SchemeState, Trace};
use crate::model::SigmaModel;
use crate::objectives::Objective;

/// Least-squares line through `(xs, ys)`: `(slope, intercept, r²)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::config("line fit needs at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::config("line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok((slope, intercept, r2))
}

/// Takes `steps` fixed steps of `scheme` from `x0` at rest.
pub fn integrate_fixed<O: Objective + ?Sized>(
    scheme: Scheme,
    model: &SigmaModel,
    objective: &O,
    x0: &[f64],
    tau: f64,
    steps: usize,
) -> Result<SchemeState> {
    let mut state = SchemeState::at_rest(scheme, model, x0)?;
    for k in 0..steps {
        state = step(scheme, model, objective, &state, tau)?.state;
        if !state.is_finite() {
            return Err(Error::Diverged(format!("{scheme} with tau = {tau} at step {}", k + 1)));
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudyReport {
    pub scheme: Scheme,
    pub taus: Vec<f64>,
    /// `‖x(T) - x_ref(T)‖₂` per step size.
    pub errors: Vec<f64>,
    /// Slope of `log error` against `log τ`.
    pub fitted_order: f64,
    pub reference_tau: f64,
}

fn step_count(span: f64, tau: f64) -> Result<usize> {
    let n = span / tau;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded {
        return Err(Error::config(format!("horizon span {span} is not a multiple of tau = {tau}")));
    }
    Ok(rounded as usize)
}

/// Fixed-horizon global errors of `scheme` against an RK4 reference run at
/// `min(taus) / 64`, with the fitted order.
pub fn order_study<O: Objective + ?Sized>(
    scheme: Scheme,
    model: &SigmaModel,
    objective: &O,
    x0: &[f64],
    horizon: f64,
    taus: &[f64],
) -> Result<OrderStudyReport> {
    if taus.len() < 2 {
        return Err(Error::config("order study needs at least two step sizes"));
    }
    if taus.windows(2).any(|w| !(w[1] < w[0])) || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::config("order study step sizes must be positive and strictly decreasing"));
    }
    let span = horizon - model.t0();
    if !(span > 0.0) {
        return Err(Error::config(format!("horizon {horizon} must exceed t0 = {}", model.t0())));
    }
    let tau_min = *taus.last().expect("non-empty");
    let reference_tau = tau_min / 64.0;
    let reference = integrate_fixed(
        Scheme::Rk4,
        model,
        objective,
        x0,
        reference_tau,
        step_count(span, tau_min)? * 64,
    )?;
    let mut errors = Vec::with_capacity(taus.len());
    for &tau in taus {
        let end = integrate_fixed(scheme, model, objective, x0, tau, step_count(span, tau)?)?;
        let err = end
            .position()
            .iter()
            .zip(reference.position())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        errors.push(err);
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::config("order study produced a zero error; choose a nontrivial start"));
    }
    let lt: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let le: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (fitted_order, _, _) = fit_line(&lt, &le)?;
    Ok(OrderStudyReport { scheme, taus: taus.to_vec(), errors, fitted_order, reference_tau })
}

/// Central-difference Jacobian of the one-step `(q, p)` map at `state`.
pub fn one_step_jacobian<O: Objective + ?Sized>(
    scheme: Scheme,
    model: &SigmaModel,
    objective: &O,
    state: &PhaseState,
    tau: f64,
    fd_h: f64,
) -> Result<DMatrix<f64>> {
    if !scheme.is_symplectic() {
        return Err(Error::config(format!(
            "{scheme} is not a symplectic scheme; no volume-preservation claim to check"
        )));
    }
    if !(fd_h > 0.0) {
        return Err(Error::config("finite-difference step must be positive"));
    }
    let d = state.dim();
    let flat = |s: &PhaseState| -> Vec<f64> { s.q.iter().chain(&s.p).copied().collect() };
    let map = |z: &[f64]| -> Result<Vec<f64>> {
        let s = SchemeState::Phase(PhaseState { q: z[..d].to_vec(), p: z[d..].to_vec(), t: state.t });
        match step(scheme, model, objective, &s, tau)?.state {
            SchemeState::Phase(out) => Ok(flat(&out)),
            SchemeState::Velocity(_) => unreachable!("splitting schemes stay in phase space"),
        }
    };
    let z0 = flat(state);
    let mut jac = DMatrix::zeros(2 * d, 2 * d);
    let mut z = z0.clone();
    for j in 0..2 * d {
        z[j] = z0[j] + fd_h;
        let plus = map(&z)?;
        z[j] = z0[j] - fd_h;
        let minus = map(&z)?;
        z[j] = z0[j];
        for i in 0..2 * d {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * fd_h);
        }
    }
    Ok(jac)
}

/// `|det J - 1|` for the one-step map of a splitting scheme.
pub fn symplecticity_check<O: Objective + ?Sized>(
    scheme: Scheme,
    model: &SigmaModel,
    objective: &O,
    state: &PhaseState,
    tau: f64,
    fd_h: f64,
) -> Result<f64> {
    let jac = one_step_jacobian(scheme, model, objective, state, tau, fd_h)?;
    Ok((jac.determinant() - 1.0).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFitReport {
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits `log |f(x(t)) - f*|` against `log t` over trace records with `t`
/// inside `window`, skipping gaps at rounding level.
pub fn rate_fit<O: Objective + ?Sized>(trace: &Trace, objective: &O, window: (f64, f64)) -> Result<RateFitReport> {
    let (t_lo, t_hi) = window;
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::config(format!("invalid rate window [{t_lo}, {t_hi}]")));
    }
    let (_, f_star) = objective
        .known_optimum()
        .ok_or_else(|| Error::config("rate fit needs an objective with a known optimum"))?;
    let floor = 1e2 * f64::EPSILON * f_star.abs() + 1e-14;
    let (xs, ys): (Vec<f64>, Vec<f64>) = trace
        .records
        .iter()
        .filter(|r| r.t >= t_lo && r.t <= t_hi)
        .filter_map(|r| {
            let gap = (r.f - f_star).abs();
            (gap > floor).then(|| (r.t.ln(), gap.ln()))
        })
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Empty(format!("no usable records in rate window [{t_lo}, {t_hi}]")));
    }
    let (slope, intercept, r2) = fit_line(&xs, &ys)?;
    Ok(RateFitReport { window, slope, intercept, r2, points: xs.len() })
}

/// Largest `‖x'' + Γ₁ v + Γ₀ ∇f(x)‖` over interior records of a recorded
/// trace, with `x''` from central differences of `v = -p / p₀(t)`.
pub fn ode_residual<O: Objective + ?Sized>(trace: &Trace, model: &SigmaModel, objective: &O) -> Result<f64> {
    let states = trace
        .states
        .as_ref()
        .ok_or_else(|| Error::config("ODE residual needs a trace with recorded states"))?;
    ode_residual_of_states(states, model, objective)
}

pub fn ode_residual_of_states<O: Objective + ?Sized>(
    states: &[PhaseState],
    model: &SigmaModel,
    objective: &O,
) -> Result<f64> {
    if states.len() < 3 {
        return Err(Error::config(format!(
            "ODE residual needs at least 3 records, got {}",
            states.len()
        )));
    }
    let velocities = states
        .iter()
        .map(|s| crate::flows::velocity_from_momentum(model, s))
        .collect::<Result<Vec<_>>>()?;
    let mut grad = vec![0.0; states[0].dim()];
    let mut worst = 0.0f64;
    for k in 1..states.len() - 1 {
        let (prev, cur, next) = (&states[k - 1], &states[k], &states[k + 1]);
        let h_back = cur.t - prev.t;
        let h_fwd = next.t - cur.t;
        if (h_back - h_fwd).abs() > 1e-9 * h_fwd.abs() {
            return Err(Error::config("ODE residual needs uniformly spaced records"));
        }
        objective.gradient_into(&cur.q, &mut grad)?;
        let g0 = model.gamma0(cur.t)?;
        let g1 = model.gamma1(cur.t)?;
        let r: f64 = (0..grad.len())
            .map(|a| {
                let acc = (velocities[k + 1][a] - velocities[k - 1][a]) / (next.t - prev.t);
                (acc + g1 * velocities[k][a] + g0 * grad[a]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}
