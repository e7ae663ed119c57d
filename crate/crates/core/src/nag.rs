//! Nesterov's accelerated gradient with momentum coefficient `(k-1)/(k+2)`,
//! plus the function-value restart and Armijo backtracking used as the
//! discrete baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::integrators::{StopReason, StoppingRule, Trace, TraceRecord};
use crate::objectives::Objective;

#[derive(Debug, Clone, PartialEq)]
pub struct NagState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Momentum counter, `>= 1`.
    pub k: usize,
    /// Step size `s_N`.
    pub step: f64,
}

impl NagState {
    pub fn new(x0: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::config(format!("NAG step size must be positive, got {step}")));
        }
        Ok(Self { y: x0.clone(), x: x0, k: 1, step })
    }

    /// Coefficient applied to `x_new - x_old` on the next step.
    pub fn momentum(&self) -> f64 {
        (self.k as f64 - 1.0) / (self.k as f64 + 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktrackParams {
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub c: f64,
    pub growth: f64,
    pub max_shrinks: usize,
}

impl Default for BacktrackParams {
    fn default() -> Self {
        Self { shrink: 0.5, c: 1e-4, growth: 1.1, max_shrinks: 30 }
    }
}

impl BacktrackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::config(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::config(format!("Armijo constant must lie in (0, 1), got {}", self.c)));
        }
        if !(self.growth >= 1.0) || !self.growth.is_finite() {
            return Err(Error::config(format!("growth must be >= 1, got {}", self.growth)));
        }
        Ok(())
    }
}

/// Result of one NAG iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NagStep {
    pub state: NagState,
    /// `f(x_new)`, when the step computed it.
    pub f_new: Option<f64>,
    pub grad_evals: usize,
    pub restarted: bool,
}

fn advance(state: &NagState, grad_y: &[f64], step: f64) -> NagState {
    let x_new: Vec<f64> = state.y.iter().zip(grad_y).map(|(y, g)| y - step * g).collect();
    let beta = state.momentum();
    let y_new = x_new
        .iter()
        .zip(&state.x)
        .map(|(xn, xo)| xn + beta * (xn - xo))
        .collect();
    NagState { x: x_new, y: y_new, k: state.k + 1, step: state.step }
}

/// `x ← y - s ∇f(y)`, `y ← x + (k-1)/(k+2) (x - x_old)`, `k ← k + 1`.
pub fn nag_step<O: Objective + ?Sized>(objective: &O, state: &NagState) -> Result<NagState> {
    check_dim(objective.dim(), state.y.len())?;
    let g = objective.gradient(&state.y)?;
    Ok(advance(state, &g, state.step))
}

fn restart_if_increased(mut state: NagState, f_new: f64, f_prev: f64) -> (NagState, bool) {
    if f_new > f_prev {
        state.k = 1;
        state.y = state.x.clone();
        (state, true)
    } else {
        (state, false)
    }
}

/// [`nag_step`] followed by a function-value restart: if `f(x_new) > f_prev`
/// the momentum counter resets to 1 and `y ← x_new`.
pub fn nag_step_restarted<O: Objective + ?Sized>(
    objective: &O,
    state: &NagState,
    f_prev: f64,
) -> Result<NagStep> {
    let next = nag_step(objective, state)?;
    let f_new = objective.value(&next.x)?;
    let (state, restarted) = restart_if_increased(next, f_new, f_prev);
    Ok(NagStep { state, f_new: Some(f_new), grad_evals: 1, restarted })
}

/// Armijo search on `s` at `y`, then a NAG step with the accepted `s`. The
/// returned state carries `growth · s` as the next trial step.
///
/// `grad_evals` is one plus the number of rejected trials.
pub fn nag_backtracking_step<O: Objective + ?Sized>(
    objective: &O,
    state: &NagState,
    bt: &BacktrackParams,
) -> Result<NagStep> {
    bt.validate()?;
    check_dim(objective.dim(), state.y.len())?;
    let g = objective.gradient(&state.y)?;
    let f_y = objective.value(&state.y)?;
    let g_sq: f64 = g.iter().map(|v| v * v).sum();
    let mut s = state.step;
    let mut trial = vec![0.0; g.len()];
    for rejected in 0..=bt.max_shrinks {
        for ((t, y), ga) in trial.iter_mut().zip(&state.y).zip(&g) {
            *t = y - s * ga;
        }
        let f_trial = objective.value(&trial)?;
        if f_trial.is_finite() && f_trial <= f_y - bt.c * s * g_sq {
            let mut next = advance(state, &g, s);
            next.step = s * bt.growth;
            return Ok(NagStep { state: next, f_new: Some(f_trial), grad_evals: 1 + rejected, restarted: false });
        }
        s *= bt.shrink;
    }
    Err(Error::StepFailure(format!(
        "Armijo search failed after {} shrinks from s = {}",
        bt.max_shrinks, state.step
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NagConfig {
    pub step: f64,
    pub restart: bool,
    pub backtracking: Option<BacktrackParams>,
}

impl Default for NagConfig {
    fn default() -> Self {
        Self { step: 1.0, restart: true, backtracking: Some(BacktrackParams::default()) }
    }
}

/// Runs NAG from `x0` under the shared stopping rule.
///
/// Trace records use `t = 1 + Σ s` (cumulative step length) and `tau = s`.
pub fn run_nag<O: Objective + ?Sized>(
    objective: &O,
    x0: &[f64],
    config: &NagConfig,
    stop: &StoppingRule,
    max_iters: usize,
) -> Result<Trace> {
    if max_iters == 0 {
        return Err(Error::config("max_iters must be at least 1"));
    }
    check_dim(objective.dim(), x0.len())?;
    let started = Instant::now();
    let mut state = NagState::new(x0.to_vec(), config.step)?;
    let initial_f = objective.value(x0)?;
    let mut trace = Trace {
        records: Vec::new(),
        stop_reason: StopReason::MaxIters,
        initial_f,
        initial_t: 1.0,
        final_x: x0.to_vec(),
        states: None,
    };
    let mut f_prev = initial_f;
    let mut t = 1.0;
    let mut grad_evals = 0;
    for iter in 1..=max_iters {
        let used_step;
        let outcome = match &config.backtracking {
            Some(bt) => {
                let r = nag_backtracking_step(objective, &state, bt);
                used_step = r.as_ref().map_or(state.step, |r| r.state.step / bt.growth);
                r
            }
            None => {
                used_step = state.step;
                nag_step(objective, &state).map(|s| NagStep { state: s, f_new: None, grad_evals: 1, restarted: false })
            }
        };
        let step = match outcome {
            Ok(s) => s,
            Err(Error::StepFailure(_)) => {
                trace.stop_reason = StopReason::StepFailure;
                break;
            }
            Err(e) => return Err(e),
        };
        let f_new = match step.f_new {
            Some(f) => f,
            None => objective.value(&step.state.x)?,
        };
        let mut next = step.state;
        if config.restart {
            next = restart_if_increased(next, f_new, f_prev).0;
        }
        if !f_new.is_finite() || next.x.iter().any(|v| !v.is_finite()) {
            trace.stop_reason = StopReason::Diverged;
            break;
        }
        grad_evals += step.grad_evals;
        t += used_step;
        let g = objective.gradient(&next.x)?;
        trace.records.push(TraceRecord {
            iter,
            t,
            f: f_new,
            grad_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
            grad_evals,
            elapsed_ns: started.elapsed().as_nanos() as u64,
            tau: used_step,
        });
        trace.final_x.copy_from_slice(&next.x);
        state = next;
        if stop.is_met(f_prev, f_new) {
            trace.stop_reason = StopReason::RelTol;
            break;
        }
        f_prev = f_new;
    }
    Ok(trace)
}
