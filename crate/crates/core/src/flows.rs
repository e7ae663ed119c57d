//! Exact sub-flows of the split Hamiltonian `H_K + H_V`.
//!
//! `H_K = -Σ p_a² / (2 p₀(t))` only moves positions (a drift whose length is
//! the integral of `-1/p₀`), and `H_V = -p₀(t) Γ₀(t) f(q)` only moves momenta
//! (a kick along `∇f` weighted by the integral of `p₀ Γ₀`). Both integrals
//! have closed forms for Zhang's coefficients, so every sub-flow is an
//! explicit shear of `(q, p)`.
//!
//! The flows take an explicit interval `[from_t, to_t]` and never touch the
//! `t` field: the caller owns time bookkeeping. Reversed intervals
//! (`from_t > to_t`) give the inverse flow, which composition methods with
//! negative sub-steps rely on.

use crate::error::{check_dim, Error, Result};
use crate::model::{power_diff, SigmaModel};
use crate::objectives::Objective;

/// Reduced phase-space point: position `q` (the optimisation variable `x`),
/// conjugate momentum `p`, and time `t > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        check_dim(q.len(), p.len())?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("phase state time must be positive, got {t}")));
        }
        Ok(Self { q, p, t })
    }

    /// State at rest (`p = 0`) at position `q`.
    pub fn at_rest(q: Vec<f64>, t: f64) -> Result<Self> {
        let p = vec![0.0; q.len()];
        Self::new(q, p, t)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

/// `∫ -1/p₀(s) ds` over `[from_t, to_t]`, i.e. `(to^-2σ - from^-2σ) / (2σ p₀(1))`.
pub fn drift_coefficient(model: &SigmaModel, from_t: f64, to_t: f64) -> Result<f64> {
    let sigma = model.sigma();
    Ok(power_diff(from_t, to_t, -2.0 * sigma)? / (2.0 * sigma * model.p0_at_1()))
}

/// `∫ p₀(s) Γ₀(s) ds` over `[from_t, to_t]`, i.e. `σ p₀(1) (to^3σ - from^3σ) / 3`.
pub fn kick_coefficient(model: &SigmaModel, from_t: f64, to_t: f64) -> Result<f64> {
    let sigma = model.sigma();
    Ok(sigma * model.p0_at_1() / 3.0 * power_diff(from_t, to_t, 3.0 * sigma)?)
}

pub(crate) fn drift_in_place(
    model: &SigmaModel,
    q: &mut [f64],
    p: &[f64],
    from_t: f64,
    to_t: f64,
) -> Result<()> {
    let c = drift_coefficient(model, from_t, to_t)?;
    if c != 0.0 {
        for (qa, pa) in q.iter_mut().zip(p) {
            *qa += c * pa;
        }
    }
    Ok(())
}

/// Evaluates `∇f(q)` exactly once into `grad`, then kicks `p`.
pub(crate) fn kick_in_place<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    q: &[f64],
    p: &mut [f64],
    from_t: f64,
    to_t: f64,
    grad: &mut [f64],
) -> Result<()> {
    let c = kick_coefficient(model, from_t, to_t)?;
    objective.gradient_into(q, grad)?;
    for (pa, ga) in p.iter_mut().zip(grad.iter()) {
        *pa += c * ga;
    }
    Ok(())
}

/// Exact flow of `H_K` over `[from_t, to_t]`: `q += p · drift_coefficient`, `p` fixed.
pub fn flow_k(model: &SigmaModel, state: &PhaseState, from_t: f64, to_t: f64) -> Result<PhaseState> {
    check_dim(state.q.len(), state.p.len())?;
    let mut out = state.clone();
    drift_in_place(model, &mut out.q, &state.p, from_t, to_t)?;
    Ok(out)
}

/// Exact flow of `H_V` over `[from_t, to_t]`: `p += ∇f(q) · kick_coefficient`, `q` fixed.
///
/// Exactly one gradient evaluation, at the unchanged `q`.
pub fn flow_v<O: Objective + ?Sized>(
    model: &SigmaModel,
    objective: &O,
    state: &PhaseState,
    from_t: f64,
    to_t: f64,
) -> Result<PhaseState> {
    check_dim(state.q.len(), state.p.len())?;
    let mut out = state.clone();
    let mut grad = vec![0.0; state.q.len()];
    kick_in_place(model, objective, &state.q, &mut out.p, from_t, to_t, &mut grad)?;
    Ok(out)
}

pub fn time_shift(state: &PhaseState, dt: f64) -> Result<PhaseState> {
    let t = state.t + dt;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time shift by {dt} from t = {} leaves t > 0", state.t)));
    }
    Ok(PhaseState { t, ..state.clone() })
}

/// `v = -p / p₀(t)`.
pub fn velocity_from_momentum(model: &SigmaModel, state: &PhaseState) -> Result<Vec<f64>> {
    let p0 = model.p0(state.t)?;
    Ok(state.p.iter().map(|pa| -pa / p0).collect())
}

/// `p = -p₀(t) v`.
pub fn momentum_from_velocity(model: &SigmaModel, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    let p0 = model.p0(t)?;
    Ok(v.iter().map(|va| -p0 * va).collect())
}
