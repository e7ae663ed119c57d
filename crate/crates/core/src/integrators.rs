//! One-step maps for Zhang's ODE and the run loop that drives them.
//!
//! The splitting schemes (`si1`, `si2`, `si4`) compose the exact sub-flows of
//! [`crate::flows`] and consume one gradient per splitting stage. The
//! Runge–Kutta baselines integrate the first-order system `x' = v`,
//! `v' = -Γ₁ v - Γ₀ ∇f(x)` directly in `(x, v)` coordinates.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::flows::{drift_in_place, kick_in_place, momentum_from_velocity, PhaseState};
use crate::model::SigmaModel;
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Lie–Trotter splitting, drift then kick.
    Si1,
    /// Strang splitting with sub-flows tiling `[t, t + τ]`.
    Si2,
    /// Strang splitting with the sub-flow intervals read literally off the
    /// time-shift concatenation; kept for comparison with [`Scheme::Si2`].
    Si2Literal,
    /// Triple-jump composition of [`Scheme::Si2`].
    Si4,
    Rk2,
    Rk4,
}

impl Scheme {
    pub const ALL: [Scheme; 6] =
        [Scheme::Si1, Scheme::Si2, Scheme::Si2Literal, Scheme::Si4, Scheme::Rk2, Scheme::Rk4];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Si1 => "si1",
            Scheme::Si2 => "si2",
            Scheme::Si2Literal => "si2-literal",
            Scheme::Si4 => "si4",
            Scheme::Rk2 => "rk2",
            Scheme::Rk4 => "rk4",
        }
    }

    /// Gradient evaluations consumed by one fixed-size step.
    pub fn grad_evals_per_step(self) -> usize {
        match self {
            Scheme::Si1 | Scheme::Si2 | Scheme::Si2Literal => 1,
            Scheme::Rk2 => 2,
            Scheme::Si4 => 3,
            Scheme::Rk4 => 4,
        }
    }

    /// Whether the one-step `(q, p)` map is a composition of exact shears.
    pub fn is_symplectic(self) -> bool {
        !matches!(self, Scheme::Rk2 | Scheme::Rk4)
    }

    /// Nominal order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Scheme::Si1 | Scheme::Si2Literal => 1,
            Scheme::Si2 | Scheme::Rk2 => 2,
            Scheme::Si4 | Scheme::Rk4 => 4,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == lower)
            .ok_or_else(|| Error::config(format!("unknown scheme {s:?}")))
    }
}

/// Trial-and-shrink step-size control for the ODE integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktrackParams {
    pub shrink: f64,
    pub growth: f64,
    /// Accepted relative increase of `f` per step.
    pub tol_increase: f64,
    pub max_shrinks: usize,
    pub tau_max: f64,
}

impl Default for BacktrackParams {
    fn default() -> Self {
        Self { shrink: 0.5, growth: 1.1, tol_increase: 1e-3, max_shrinks: 30, tau_max: 0.5 }
    }
}

impl BacktrackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::config(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.growth >= 1.0) || !self.growth.is_finite() {
            return Err(Error::config(format!("growth must be >= 1, got {}", self.growth)));
        }
        if !(self.tol_increase >= 0.0) {
            return Err(Error::config("tol_increase must be >= 0"));
        }
        if !(self.tau_max > 0.0) {
            return Err(Error::config("tau_max must be positive"));
        }
        Ok(())
    }

    /// Step size to try after accepting `accepted`.
    pub fn next_tau(&self, accepted: f64) -> f64 {
        (accepted * self.growth).min(self.tau_max)
    }

    fn accepts(&self, f_old: f64, f_new: f64) -> bool {
        f_new.is_finite() && f_new <= f_old + self.tol_increase * f_old.abs() + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Adaptation {
    Fixed,
    Backtracking(BacktrackParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub tau: f64,
    pub adaptation: Adaptation,
}

impl StepperConfig {
    pub fn fixed(scheme: Scheme, tau: f64) -> Result<Self> {
        let cfg = Self { scheme, tau, adaptation: Adaptation::Fixed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn backtracking(scheme: Scheme, tau: f64, params: BacktrackParams) -> Result<Self> {
        let cfg = Self { scheme, tau, adaptation: Adaptation::Backtracking(params) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::config(format!("step size must be positive, got {}", self.tau)));
        }
        if let Adaptation::Backtracking(bt) = &self.adaptation {
            bt.validate()?;
        }
        Ok(())
    }
}

/// Integrator state in `(x, v)` coordinates, used by the Runge–Kutta schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct XvState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl XvState {
    pub fn new(x: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self> {
        check_dim(x.len(), v.len())?;
        if !(t > 0.0) {
            return Err(Error::domain(format!("time must be positive, got {t}")));
        }
        Ok(Self { x, v, t })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<S = PhaseState> {
    pub state: S,
    pub grad_evals: usize,
    pub accepted_tau: f64,
}

fn require_step(state_t: f64, tau: f64) -> Result<()> {
    if !(state_t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {state_t}")));
    }
    if tau == 0.0 || !tau.is_finite() {
        return Err(Error::domain(format!("step size must be nonzero and finite, got {tau}")));
    }
    if !(state_t + tau > 0.0) {
        return Err(Error::Range(format!("step {tau} from t = {state_t} ends at nonpositive time")));
    }
    Ok(())
}

/// Strang step from `t_start` to `t_end` (either direction), in place.
fn strang_between<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    q: &mut [f64],
    p: &mut [f64],
    t_start: f64,
    t_end: f64,
    grad: &mut [f64],
) -> Result<()> {
    let t_mid = t_start + 0.5 * (t_end - t_start);
    drift_in_place(model, q, p, t_start, t_mid)?;
    kick_in_place(model, objective, q, p, t_start, t_end, grad)?;
    drift_in_place(model, q, p, t_mid, t_end)?;
    Ok(())
}

/// First-order splitting step: drift over `[t, t+τ]`, then kick over `[t, t+τ]`.
pub fn step_si1<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &PhaseState,
    tau: f64,
) -> Result<StepReport> {
    require_step(state.t, tau)?;
    let mut out = state.clone();
    let mut grad = vec![0.0; state.dim()];
    let t_end = state.t + tau;
    drift_in_place(model, &mut out.q, &state.p, state.t, t_end)?;
    kick_in_place(model, objective, &out.q, &mut out.p, state.t, t_end, &mut grad)?;
    out.t = t_end;
    Ok(StepReport { state: out, grad_evals: 1, accepted_tau: tau })
}

/// Second-order Strang step: drift `[t, t+τ/2]`, kick `[t, t+τ]`, drift `[t+τ/2, t+τ]`.
pub fn step_si2<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &PhaseState,
    tau: f64,
) -> Result<StepReport> {
    require_step(state.t, tau)?;
    let mut out = state.clone();
    let mut grad = vec![0.0; state.dim()];
    let t_end = state.t + tau;
    strang_between(model, objective, &mut out.q, &mut out.p, state.t, t_end, &mut grad)?;
    out.t = t_end;
    Ok(StepReport { state: out, grad_evals: 1, accepted_tau: tau })
}

/// Strang step with every sub-flow integrated from the half-shifted time
/// `t' = t + τ/2`: drift `[t', t'+τ/2]`, kick `[t', t'+τ]`, drift `[t', t'+τ/2]`.
pub fn step_si2_literal<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &PhaseState,
    tau: f64,
) -> Result<StepReport> {
    require_step(state.t, tau)?;
    let mut out = state.clone();
    let mut grad = vec![0.0; state.dim()];
    let shifted = state.t + 0.5 * tau;
    drift_in_place(model, &mut out.q, &state.p, shifted, shifted + 0.5 * tau)?;
    kick_in_place(model, objective, &out.q, &mut out.p, shifted, shifted + tau, &mut grad)?;
    let p = out.p.clone();
    drift_in_place(model, &mut out.q, &p, shifted, shifted + 0.5 * tau)?;
    out.t = state.t + tau;
    Ok(StepReport { state: out, grad_evals: 1, accepted_tau: tau })
}

/// Triple-jump weights `(w₁, w₀)` with `2w₁ + w₀ = 1`.
pub fn triple_jump_weights() -> (f64, f64) {
    let w1 = 1.0 / (2.0 - 2f64.cbrt());
    (w1, 1.0 - 2.0 * w1)
}

/// Fourth-order composition of three Strang steps of lengths `w₁τ, w₀τ, w₁τ`.
/// The middle step runs backwards in time.
pub fn step_si4<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &PhaseState,
    tau: f64,
) -> Result<StepReport> {
    require_step(state.t, tau)?;
    let (w1, w0) = triple_jump_weights();
    let t0 = state.t;
    let t_a = t0 + w1 * tau;
    let t_b = t_a + w0 * tau;
    let t_c = t0 + tau;
    if let Some(bad) = [t_a, t_b].into_iter().find(|t| !(*t > 0.0)) {
        return Err(Error::Range(format!(
            "fourth-order composition with tau = {tau} from t = {t0} reaches time {bad} <= 0"
        )));
    }
    let mut out = state.clone();
    let mut grad = vec![0.0; state.dim()];
    for (from, to) in [(t0, t_a), (t_a, t_b), (t_b, t_c)] {
        strang_between(model, objective, &mut out.q, &mut out.p, from, to, &mut grad)?;
    }
    out.t = t_c;
    Ok(StepReport { state: out, grad_evals: 3, accepted_tau: tau })
}

/// Classical explicit midpoint step for `y' = rhs(t, y)`.
pub fn rk2_generic<F>(mut rhs: F, t: f64, y: &[f64], tau: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    rhs(t, y, &mut k1)?;
    let mid: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * tau * k).collect();
    rhs(t + 0.5 * tau, &mid, &mut k2)?;
    Ok(y.iter().zip(&k2).map(|(a, k)| a + tau * k).collect())
}

/// Classical four-stage Runge–Kutta step for `y' = rhs(t, y)`.
pub fn rk4_generic<F>(mut rhs: F, t: f64, y: &[f64], tau: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = vec![0.0; n];
    rhs(t, y, &mut k[0])?;
    for (i, c) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
        for j in 0..n {
            stage[j] = y[j] + c * tau * k[i - 1][j];
        }
        rhs(t + c * tau, &stage, &mut k[i])?;
    }
    Ok((0..n)
        .map(|j| y[j] + tau / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]))
        .collect())
}

fn zhang_rhs<'a, O: Objective + ?Sized>(
    model: &'a SigmaModel,
    objective: &'a O,
    d: usize,
) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + 'a {
    move |t, y, out| {
        let (x, v) = y.split_at(d);
        let (dx, dv) = out.split_at_mut(d);
        dx.copy_from_slice(v);
        model.zhang_acceleration_into(objective, x, v, t, dv)
    }
}

fn rk_step<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &XvState,
    tau: f64,
    fourth_order: bool,
) -> Result<StepReport<XvState>> {
    require_step(state.t, tau)?;
    check_dim(state.x.len(), state.v.len())?;
    let d = state.x.len();
    let y: Vec<f64> = state.x.iter().chain(&state.v).copied().collect();
    let rhs = zhang_rhs(model, objective, d);
    let (y, grad_evals) = if fourth_order {
        (rk4_generic(rhs, state.t, &y, tau)?, 4)
    } else {
        (rk2_generic(rhs, state.t, &y, tau)?, 2)
    };
    let (x, v) = y.split_at(d);
    Ok(StepReport {
        state: XvState { x: x.to_vec(), v: v.to_vec(), t: state.t + tau },
        grad_evals,
        accepted_tau: tau,
    })
}

pub fn step_rk2<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &XvState,
    tau: f64,
) -> Result<StepReport<XvState>> {
    rk_step(model, objective, state, tau, false)
}

pub fn step_rk4<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &XvState,
    tau: f64,
) -> Result<StepReport<XvState>> {
    rk_step(model, objective, state, tau, true)
}

/// State carried by a run: phase-space for splitting schemes, `(x, v)` for RK.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeState {
    Phase(PhaseState),
    Velocity(XvState),
}

impl SchemeState {
    /// Start at `x0` with zero velocity (hence zero momentum) at `model.t0()`.
    pub fn at_rest(scheme: Scheme, model: &SigmaModel, x0: &[f64]) -> Result<Self> {
        let t0 = model.t0();
        Ok(if scheme.is_symplectic() {
            SchemeState::Phase(PhaseState::at_rest(x0.to_vec(), t0)?)
        } else {
            SchemeState::Velocity(XvState::new(x0.to_vec(), vec![0.0; x0.len()], t0)?)
        })
    }

    pub fn position(&self) -> &[f64] {
        match self {
            SchemeState::Phase(s) => &s.q,
            SchemeState::Velocity(s) => &s.x,
        }
    }

    pub fn t(&self) -> f64 {
        match self {
            SchemeState::Phase(s) => s.t,
            SchemeState::Velocity(s) => s.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            SchemeState::Phase(s) => s.is_finite(),
            SchemeState::Velocity(s) => {
                s.t.is_finite() && s.x.iter().chain(&s.v).all(|v| v.is_finite())
            }
        }
    }

    pub fn to_phase(&self, model: &SigmaModel) -> Result<PhaseState> {
        match self {
            SchemeState::Phase(s) => Ok(s.clone()),
            SchemeState::Velocity(s) => {
                let p = momentum_from_velocity(model, s.t, &s.v)?;
                PhaseState::new(s.x.clone(), p, s.t)
            }
        }
    }
}

/// One fixed-size step of `scheme`.
pub fn step<O: Objective + ?Sized>(
    scheme: Scheme,
    model: &SigmaModel,
    objective: &O,
    state: &SchemeState,
    tau: f64,
) -> Result<StepReport<SchemeState>> {
    let phase = |r: StepReport| StepReport {
        state: SchemeState::Phase(r.state),
        grad_evals: r.grad_evals,
        accepted_tau: r.accepted_tau,
    };
    let velocity = |r: StepReport<XvState>| StepReport {
        state: SchemeState::Velocity(r.state),
        grad_evals: r.grad_evals,
        accepted_tau: r.accepted_tau,
    };
    match (scheme, state) {
        (Scheme::Si1, SchemeState::Phase(s)) => step_si1(model, objective, s, tau).map(phase),
        (Scheme::Si2, SchemeState::Phase(s)) => step_si2(model, objective, s, tau).map(phase),
        (Scheme::Si2Literal, SchemeState::Phase(s)) => {
            step_si2_literal(model, objective, s, tau).map(phase)
        }
        (Scheme::Si4, SchemeState::Phase(s)) => step_si4(model, objective, s, tau).map(phase),
        (Scheme::Rk2, SchemeState::Velocity(s)) => step_rk2(model, objective, s, tau).map(velocity),
        (Scheme::Rk4, SchemeState::Velocity(s)) => step_rk4(model, objective, s, tau).map(velocity),
        (scheme, _) => Err(Error::config(format!("state coordinates do not match scheme {scheme}"))),
    }
}

/// Step with trial-and-shrink control: starting at `config.tau`, shrink until
/// `f(x')` does not exceed `f(x)` by more than the configured tolerance.
///
/// `grad_evals` includes the rejected attempts.
pub fn step_with_backtracking<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &SchemeState,
    config: &StepperConfig,
) -> Result<StepReport<SchemeState>> {
    let f_old = objective.value(state.position())?;
    backtrack_from(model, objective, state, config, config.tau, f_old).map(|(r, _)| r)
}

/// Returns the accepted report and `f` at the accepted state.
fn backtrack_from<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &SchemeState,
    config: &StepperConfig,
    tau: f64,
    f_old: f64,
) -> Result<(StepReport<SchemeState>, f64)> {
    let Adaptation::Backtracking(bt) = config.adaptation else {
        return Err(Error::config("backtracking step requested without backtracking parameters"));
    };
    let mut trial_tau = tau;
    let mut grad_evals = 0;
    for attempt in 0..=bt.max_shrinks {
        if attempt > 0 {
            trial_tau *= bt.shrink;
        }
        match step(config.scheme, model, objective, state, trial_tau) {
            Ok(report) => {
                grad_evals += report.grad_evals;
                let f_new = objective.value(report.state.position())?;
                if report.state.is_finite() && bt.accepts(f_old, f_new) {
                    return Ok((StepReport { grad_evals, ..report }, f_new));
                }
            }
            // Overflow of the time coefficients counts as a rejected trial.
            Err(Error::Range(_)) => grad_evals += config.scheme.grad_evals_per_step(),
            Err(e) => return Err(e),
        }
    }
    Err(Error::StepFailure(format!(
        "no acceptable step after {} shrinks from tau = {tau} at t = {}",
        bt.max_shrinks,
        state.t()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    /// Stop once `|f_k - f_{k-1}| / max(|f_{k-1}|, 1e-12) < rel_tol`.
    /// Zero disables the test. Integrator runs skip it on steps that leave
    /// the position unchanged.
    pub rel_tol: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { rel_tol: 1e-6 }
    }
}

impl StoppingRule {
    pub fn never() -> Self {
        Self { rel_tol: 0.0 }
    }

    pub fn is_met(&self, f_prev: f64, f_new: f64) -> bool {
        (f_new - f_prev).abs() / f_prev.abs().max(1e-12) < self.rel_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RelTol,
    MaxIters,
    /// A non-finite objective or state, or coefficient overflow.
    Diverged,
    /// Backtracking could not find an acceptable step.
    StepFailure,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::RelTol => "rel_tol",
            StopReason::MaxIters => "max_iters",
            StopReason::Diverged => "diverged",
            StopReason::StepFailure => "step_failure",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, StopReason::Diverged | StopReason::StepFailure)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub t: f64,
    pub f: f64,
    pub grad_norm: f64,
    /// Cumulative gradient evaluations consumed by the method.
    pub grad_evals: usize,
    pub elapsed_ns: u64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub stop_reason: StopReason,
    pub initial_f: f64,
    pub initial_t: f64,
    pub final_x: Vec<f64>,
    /// Phase-space states, initial state first, when recording was requested.
    pub states: Option<Vec<PhaseState>>,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn grad_evals(&self) -> usize {
        self.records.last().map_or(0, |r| r.grad_evals)
    }

    pub fn final_f(&self) -> f64 {
        self.records.last().map_or(self.initial_f, |r| r.f)
    }

    pub fn final_t(&self) -> f64 {
        self.records.last().map_or(self.initial_t, |r| r.t)
    }

    pub fn wall_ns(&self) -> u64 {
        self.records.last().map_or(0, |r| r.elapsed_ns)
    }

    pub fn best_f(&self) -> f64 {
        self.records.iter().map(|r| r.f).fold(self.initial_f, f64::min)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Integrates from `x0` at rest, one [`TraceRecord`] per accepted step.
///
/// `grad_norm` in each record is a diagnostic evaluated at the new position;
/// it is not included in the `grad_evals` count.
pub fn run<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    x0: &[f64],
    config: &StepperConfig,
    stop: &StoppingRule,
    max_iters: usize,
) -> Result<Trace> {
    run_inner(model, objective, x0, config, stop, max_iters, false)
}

/// As [`run`], additionally keeping every phase-space state in [`Trace::states`].
pub fn run_recording<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    x0: &[f64],
    config: &StepperConfig,
    stop: &StoppingRule,
    max_iters: usize,
) -> Result<Trace> {
    run_inner(model, objective, x0, config, stop, max_iters, true)
}

fn run_inner<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    x0: &[f64],
    config: &StepperConfig,
    stop: &StoppingRule,
    max_iters: usize,
    record_states: bool,
) -> Result<Trace> {
    config.validate()?;
    if max_iters == 0 {
        return Err(Error::config("max_iters must be at least 1"));
    }
    check_dim(objective.dim(), x0.len())?;
    let started = Instant::now();
    let mut state = SchemeState::at_rest(config.scheme, model, x0)?;
    let initial_f = objective.value(x0)?;
    let mut trace = Trace {
        records: Vec::new(),
        stop_reason: StopReason::MaxIters,
        initial_f,
        initial_t: state.t(),
        final_x: x0.to_vec(),
        states: record_states.then(Vec::new),
    };
    if let Some(states) = trace.states.as_mut() {
        states.push(state.to_phase(model)?);
    }
    if !initial_f.is_finite() {
        trace.stop_reason = StopReason::Diverged;
        return Ok(trace);
    }

    let mut f_prev = initial_f;
    let mut tau = config.tau;
    let mut grad_evals = 0usize;
    let mut grad = vec![0.0; x0.len()];
    for iter in 1..=max_iters {
        let outcome = match config.adaptation {
            Adaptation::Fixed => step(config.scheme, model, objective, &state, tau)
                .and_then(|r| objective.value(r.state.position()).map(|f| (r, f))),
            Adaptation::Backtracking(_) => backtrack_from(model, objective, &state, config, tau, f_prev),
        };
        let (report, f_new) = match outcome {
            Ok(v) => v,
            Err(Error::Range(_)) => {
                trace.stop_reason = StopReason::Diverged;
                break;
            }
            Err(Error::StepFailure(_)) => {
                trace.stop_reason = StopReason::StepFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        if !f_new.is_finite() || !report.state.is_finite() {
            trace.stop_reason = StopReason::Diverged;
            break;
        }
        grad_evals += report.grad_evals;
        let moved = report.state.position() != state.position();
        state = report.state;
        objective.gradient_into(state.position(), &mut grad)?;
        trace.records.push(TraceRecord {
            iter,
            t: state.t(),
            f: f_new,
            grad_norm: norm(&grad),
            grad_evals,
            elapsed_ns: started.elapsed().as_nanos() as u64,
            tau: report.accepted_tau,
        });
        if let Some(states) = trace.states.as_mut() {
            states.push(state.to_phase(model)?);
        }
        trace.final_x.copy_from_slice(state.position());
        if let Adaptation::Backtracking(bt) = &config.adaptation {
            tau = bt.next_tau(report.accepted_tau);
        }
        // A pure-drift first step from rest leaves `f` unchanged without being converged.
        let stationary = grad.iter().all(|g| *g == 0.0);
        if (moved || stationary) && stop.is_met(f_prev, f_new) {
            trace.stop_reason = StopReason::RelTol;
            break;
        }
        f_prev = f_new;
    }
    Ok(trace)
}
