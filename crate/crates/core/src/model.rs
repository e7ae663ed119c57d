//! Time-dependent coefficients of Zhang's accelerated-gradient ODE
//!
//! ```text
//! x'' + Γ₁(t) x' + Γ₀(t) ∇f(x) = 0,   Γ₀ = σ² t^(σ-2),   Γ₁ = (2σ+1)/t
//! ```
//!
//! together with the Hamiltonians that describe it: the contact Hamiltonian
//! `K`, its symplectization `H = -p₀ K` on the extended phase space, and the
//! reduced split Hamiltonian `H_K + H_V` that the integrators are built on.

use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;

/// Exponents above this magnitude are evaluated as `exp(k ln t)`.
const LOG_DOMAIN_EXPONENT: f64 = 64.0;

/// `t^k` for `t > 0`, failing with a range error instead of returning `inf`.
pub(crate) fn power(t: f64, k: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("power base must be positive, got t = {t}")));
    }
    let v = if k.abs() > LOG_DOMAIN_EXPONENT {
        (k * t.ln()).exp()
    } else {
        t.powf(k)
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range(format!("t^{k} overflows at t = {t}")))
    }
}

/// `b^k - a^k` for positive `a`, `b`, without cancellation when `b ≈ a`.
pub(crate) fn power_diff(a: f64, b: f64, k: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::domain(format!(
            "interval endpoints must be positive, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let base = power(a, k)?;
    let v = base * (k * ((b - a) / a).ln_1p()).exp_m1();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range(format!("{b}^{k} - {a}^{k} overflows")))
    }
}

fn require_positive_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be positive and finite, got t = {t}")))
    }
}

/// Rate parameter σ together with the normalisation `p₀(1)` and start time `t₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaModel {
    sigma: f64,
    p0_at_1: f64,
    t0: f64,
}

impl SigmaModel {
    /// Model with `p₀(1) = 1` and `t₀ = 1`.
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_params(sigma, 1.0, 1.0)
    }

    pub fn with_params(sigma: f64, p0_at_1: f64, t0: f64) -> Result<Self> {
        if !(sigma >= 2.0) || !sigma.is_finite() {
            return Err(Error::config(format!("sigma must be a finite real >= 2, got {sigma}")));
        }
        if p0_at_1 == 0.0 || !p0_at_1.is_finite() {
            return Err(Error::config(format!("p0(1) must be finite and nonzero, got {p0_at_1}")));
        }
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::config(format!("t0 must be positive, got {t0}")));
        }
        Ok(Self { sigma, p0_at_1, t0 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn p0_at_1(&self) -> f64 {
        self.p0_at_1
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Γ₀(t) = σ² t^(σ-2).
    pub fn gamma0(&self, t: f64) -> Result<f64> {
        require_positive_time(t)?;
        Ok(self.sigma * self.sigma * power(t, self.sigma - 2.0)?)
    }

    /// Γ₁(t) = (2σ+1)/t.
    pub fn gamma1(&self, t: f64) -> Result<f64> {
        require_positive_time(t)?;
        Ok((2.0 * self.sigma + 1.0) / t)
    }

    /// Closed-form solution `p₀(t) = p₀(1) t^(2σ+1)` of `p₀' = Γ₁ p₀`.
    pub fn p0(&self, t: f64) -> Result<f64> {
        require_positive_time(t)?;
        Ok(self.p0_at_1 * power(t, 2.0 * self.sigma + 1.0)?)
    }

    /// Kinetic part of the reduced Hamiltonian, `-Σ p_a² / (2 p₀(t))`.
    pub fn hamiltonian_k(&self, p: &[f64], t: f64) -> Result<f64> {
        let p0 = self.p0(t)?;
        let sq: f64 = p.iter().map(|v| v * v).sum();
        Ok(-sq / (2.0 * p0))
    }

    /// Potential part of the reduced Hamiltonian, `-p₀(t) Γ₀(t) f(q)`.
    pub fn hamiltonian_v<O: Objective + ?Sized>(&self, objective: &O, q: &[f64], t: f64) -> Result<f64> {
        let p0 = self.p0(t)?;
        let g0 = self.gamma0(t)?;
        Ok(-p0 * g0 * objective.value(q)?)
    }

    /// Full Hamiltonian on the extended phase space including the redundant
    /// pair `(q⁰, p₀)`. Diagnostic only; the integrators never evolve it.
    pub fn hamiltonian_zz<O: Objective + ?Sized>(
        &self,
        objective: &O,
        state: &ExtendedDiagnosticState,
    ) -> Result<f64> {
        require_positive_time(state.t)?;
        if state.p0 == 0.0 {
            return Err(Error::domain("p0 must be nonzero"));
        }
        check_dim(state.q.len(), state.p.len())?;
        let kinetic: f64 = 0.5 * state.p.iter().map(|pa| (pa / state.p0).powi(2)).sum::<f64>();
        let bracket = kinetic
            + self.gamma0(state.t)? * objective.value(&state.q)?
            + self.gamma1(state.t)? * state.q0;
        Ok(-state.p0 * bracket)
    }

    /// Contact Hamiltonian `½ Σ γ_a² + Γ₀ f(q) + Γ₁ q⁰`.
    pub fn contact_k<O: Objective + ?Sized>(
        &self,
        objective: &O,
        q0: f64,
        q: &[f64],
        gamma: &[f64],
        t: f64,
    ) -> Result<f64> {
        require_positive_time(t)?;
        check_dim(q.len(), gamma.len())?;
        let kinetic: f64 = 0.5 * gamma.iter().map(|g| g * g).sum::<f64>();
        Ok(kinetic + self.gamma0(t)? * objective.value(q)? + self.gamma1(t)? * q0)
    }

    /// Right-hand side `x'' = -Γ₁ v - Γ₀ ∇f(x)`.
    pub fn zhang_acceleration<O: Objective + ?Sized>(
        &self,
        objective: &O,
        x: &[f64],
        v: &[f64],
        t: f64,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.zhang_acceleration_into(objective, x, v, t, &mut out)?;
        Ok(out)
    }

    pub(crate) fn zhang_acceleration_into<O: Objective + ?Sized>(
        &self,
        objective: &O,
        x: &[f64],
        v: &[f64],
        t: f64,
        out: &mut [f64],
    ) -> Result<()> {
        check_dim(x.len(), v.len())?;
        let g0 = self.gamma0(t)?;
        let g1 = self.gamma1(t)?;
        objective.gradient_into(x, out)?;
        for (a, va) in out.iter_mut().zip(v) {
            *a = -g1 * va - g0 * *a;
        }
        Ok(())
    }
}

/// Point `(q⁰, q, p₀, p, t)` of the symplectized system. The contact momentum
/// is recovered as `γ_a = -p_a / p₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedDiagnosticState {
    pub q0: f64,
    pub q: Vec<f64>,
    pub p0: f64,
    pub p: Vec<f64>,
    pub t: f64,
}

impl ExtendedDiagnosticState {
    pub fn gamma(&self) -> Result<Vec<f64>> {
        if self.p0 == 0.0 {
            return Err(Error::domain("p0 must be nonzero"));
        }
        let g: Vec<f64> = self.p.iter().map(|pa| -pa / self.p0).collect();
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::Range("gamma = -p/p0 is not finite".into()))
        }
    }
}
