use std::path::PathBuf;

use crate::data::{self, DelimitedOptions, LabelRule};
use crate::error::{Error, Result};
use crate::integrators::{BacktrackParams, Scheme, StepperConfig, StoppingRule};
use crate::model::SigmaModel;
use crate::nag::NagConfig;
use crate::objectives::{LogisticRegression, Objective, Quadratic, DEFAULT_LAMBDA_REG};

pub const DEFAULT_SIGMA: f64 = 6.0;
pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 7;
pub const MAX_TAU: f64 = 0.5;

/// Where the objective comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSource {
    /// Logistic regression on [`data::synth_logistic`] output, seeded by [`RunSpec::seed`].
    Synthetic { n: usize, d: usize, separation: f64 },
    /// The separable quadratic of [`quadratic_fixture`].
    Quadratic { dim: usize },
    Delimited { path: PathBuf, options: DelimitedOptions },
    Idx { images: PathBuf, labels: PathBuf, rule: LabelRule },
}

impl Default for ObjectiveSource {
    fn default() -> Self {
        ObjectiveSource::Synthetic { n: 200, d: 5, separation: 4.0 }
    }
}

/// Separable quadratic with centre `c_a = ½ (-½)^a`, curvatures `4^(a mod 3)`,
/// and start `x0 = c + 1`.
pub fn quadratic_fixture(dim: usize) -> Result<(Quadratic, Vec<f64>)> {
    let center: Vec<f64> = (0..dim).map(|a| 0.5 * (-0.5f64).powi(a as i32)).collect();
    let scales = (0..dim).map(|a| 4f64.powi((a % 3) as i32)).collect();
    let x0 = center.iter().map(|c| c + 1.0).collect();
    Ok((Quadratic::new(center, scales)?, x0))
}

/// An objective with its starting point.
pub struct Problem {
    pub objective: Box<dyn Objective>,
    pub x0: Vec<f64>,
    pub name: String,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("name", &self.name).field("dim", &self.x0.len()).finish()
    }
}

/// One experiment: objective, integrator settings, stopping rule, outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub source: ObjectiveSource,
    pub standardize: bool,
    pub add_intercept: bool,
    pub lambda_reg: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub sigma: f64,
    pub tau: f64,
    pub backtracking: bool,
    pub backtrack: BacktrackParams,
    /// Baseline settings for `compare-nag`.
    pub nag: NagConfig,
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Integrate to this fixed time instead of stopping on `rel_tol`.
    pub horizon: Option<f64>,
    pub out_dir: PathBuf,
    pub plot: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            source: ObjectiveSource::default(),
            standardize: false,
            add_intercept: false,
            lambda_reg: DEFAULT_LAMBDA_REG,
            seed: DEFAULT_SEED,
            scheme: Scheme::Si2,
            sigma: DEFAULT_SIGMA,
            tau: DEFAULT_TAU,
            backtracking: false,
            backtrack: BacktrackParams::default(),
            nag: NagConfig::default(),
            rel_tol: DEFAULT_REL_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            horizon: None,
            out_dir: PathBuf::from("symaccel-out"),
            plot: false,
        }
    }
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 2.0) || !self.sigma.is_finite() {
            return Err(Error::config(format!("sigma must be at least 2, got {}", self.sigma)));
        }
        if !(self.tau > 0.0 && self.tau <= MAX_TAU) {
            return Err(Error::config(format!("tau must lie in (0, {MAX_TAU}], got {}", self.tau)));
        }
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::config(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if !(self.lambda_reg >= 0.0) || !self.lambda_reg.is_finite() {
            return Err(Error::config(format!("lambda_reg must be non-negative, got {}", self.lambda_reg)));
        }
        self.backtrack.validate()?;
        if !(self.nag.step > 0.0) || !self.nag.step.is_finite() {
            return Err(Error::config(format!("NAG initial step must be positive, got {}", self.nag.step)));
        }
        if let Some(bt) = &self.nag.backtracking {
            bt.validate()?;
        }
        if let Some(h) = self.horizon {
            if self.backtracking {
                return Err(Error::config("a fixed horizon needs a fixed step; drop --backtracking"));
            }
            if !(h > 1.0) || !h.is_finite() {
                return Err(Error::config(format!("horizon must exceed t0 = 1, got {h}")));
            }
        }
        match &self.source {
            ObjectiveSource::Synthetic { n, d, separation } => {
                if *n < 2 || *d == 0 || !separation.is_finite() {
                    return Err(Error::config("synthetic data needs N >= 2, d >= 1 and finite separation"));
                }
            }
            ObjectiveSource::Quadratic { dim } if *dim == 0 => {
                return Err(Error::config("quadratic needs at least one dimension"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SigmaModel> {
        SigmaModel::new(self.sigma)
    }

    pub fn stepper(&self) -> Result<StepperConfig> {
        if self.backtracking {
            StepperConfig::backtracking(self.scheme, self.tau, self.backtrack)
        } else {
            StepperConfig::fixed(self.scheme, self.tau)
        }
    }

    pub fn stopping(&self) -> StoppingRule {
        if self.horizon.is_some() {
            StoppingRule::never()
        } else {
            StoppingRule { rel_tol: self.rel_tol }
        }
    }

    /// Iteration budget: `max_iters`, or the step count reaching the horizon.
    pub fn iteration_budget(&self) -> usize {
        match self.horizon {
            Some(h) => (((h - 1.0) / self.tau).round() as usize).max(1),
            None => self.max_iters,
        }
    }

    /// Loads or generates the objective and its starting point.
    pub fn build_problem(&self) -> Result<Problem> {
        let dataset = match &self.source {
            ObjectiveSource::Quadratic { dim } => {
                let (q, x0) = quadratic_fixture(*dim)?;
                return Ok(Problem { objective: Box::new(q), x0, name: format!("quadratic-{dim}") });
            }
            ObjectiveSource::Synthetic { n, d, separation } => data::synth_logistic(self.seed, *n, *d, *separation)?,
            ObjectiveSource::Delimited { path, options } => data::load_delimited(path, options)?,
            ObjectiveSource::Idx { images, labels, rule } => data::load_idx_pair(images, labels, *rule)?,
        };
        let dataset = if self.standardize { data::standardize(&dataset)?.0 } else { dataset };
        let dataset = if self.add_intercept { dataset.with_intercept() } else { dataset };
        let objective = LogisticRegression::from_dataset(&dataset, self.lambda_reg)?;
        Ok(Problem { x0: vec![0.0; dataset.dim()], objective: Box::new(objective), name: dataset.name })
    }
}
