//! Explicit symplectic integrators for Zhang's accelerated-gradient ODE.
//!
//! Zhang's equation `x'' + (2σ+1)/t x' + σ² t^(σ-2) ∇f(x) = 0` is a
//! continuous-time model of Nesterov acceleration whose objective gap decays
//! like `t^-σ`. Written as a non-autonomous Hamiltonian system with
//! `H = H_K(p, t) + H_V(q, t)`, each half has a closed-form flow, so
//! splitting gives explicit integrators that preserve phase-space volume and
//! use one gradient per step ([`integrators::step_si2`]).
//!
//! The crate also ships the baselines used to evaluate them (classical
//! Runge–Kutta on the same ODE, Nesterov's method with restart and
//! backtracking), logistic-regression objectives and loaders, a verification
//! toolkit ([`verify`]), and the experiment harness behind the `symaccel`
//! binary ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod flows;
pub mod integrators;
pub mod model;
pub mod nag;
pub mod objectives;
pub mod verify;

pub use error::{Error, Result};
pub use flows::PhaseState;
pub use integrators::{Scheme, StepperConfig, StoppingRule, Trace, TraceRecord};
pub use model::SigmaModel;
pub use objectives::{LogisticRegression, Objective, Quadratic};
