//! Objective functions consumed by the integrators.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};

/// Default L2 regularisation weight of the logistic benchmark objective.
pub const DEFAULT_LAMBDA_REG: f64 = 1e-8;

/// A differentiable objective `f: R^d -> R`.
///
/// Implementations must be deterministic for a fixed input and safe to call
/// from several threads at once.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    /// Writes `∇f(x)` into `out`, which has length [`Objective::dim`].
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out)?;
        Ok(out)
    }

    /// Minimiser and minimum value, when known in closed form.
    fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        None
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).gradient_into(x, out)
    }
    fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        (**self).known_optimum()
    }
}

impl<O: Objective + ?Sized> Objective for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).gradient_into(x, out)
    }
    fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        (**self).known_optimum()
    }
}

/// Separable quadratic `f(x) = ½ Σ s_a (x_a - c_a)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    center: Vec<f64>,
    scales: Vec<f64>,
}

impl Quadratic {
    pub fn new(center: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        check_dim(center.len(), scales.len())?;
        if center.is_empty() {
            return Err(Error::config("quadratic needs at least one dimension"));
        }
        if let Some(s) = scales.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::config(format!("quadratic scales must be positive, got {s}")));
        }
        Ok(Self { center, scales })
    }

    /// Unit-scale bowl centred at the origin.
    pub fn isotropic(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(0.5
            * x.iter()
                .zip(&self.center)
                .zip(&self.scales)
                .map(|((xa, ca), sa)| sa * (xa - ca) * (xa - ca))
                .sum::<f64>())
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), out.len())?;
        for (((o, xa), ca), sa) in out.iter_mut().zip(x).zip(&self.center).zip(&self.scales) {
            *o = sa * (xa - ca);
        }
        Ok(())
    }

    fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        Some((self.center.clone(), 0.0))
    }
}

/// `log(1 + exp(u))` without overflow for large `|u|`.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy of a linear logistic model plus `λ‖w‖²`.
///
/// Labels are `0.0`/`1.0`; `h(x; w) = 1 / (1 + exp(-wᵀx))` with no implicit
/// intercept.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    features: Vec<f64>,
    labels: Vec<f64>,
    rows: usize,
    dim: usize,
    lambda_reg: f64,
}

impl LogisticRegression {
    /// `features` is row-major `rows × dim`.
    pub fn new(features: Vec<f64>, labels: Vec<f64>, dim: usize, lambda_reg: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("logistic regression needs dim >= 1"));
        }
        let rows = labels.len();
        if rows == 0 {
            return Err(Error::Empty("logistic regression needs at least one datum".into()));
        }
        check_dim(rows * dim, features.len())?;
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::config("labels must be 0 or 1"));
        }
        if !(lambda_reg >= 0.0) {
            return Err(Error::config(format!("lambda_reg must be >= 0, got {lambda_reg}")));
        }
        Ok(Self { features, labels, rows, dim, lambda_reg })
    }

    pub fn from_dataset(data: &Dataset, lambda_reg: f64) -> Result<Self> {
        Self::new(data.features().to_vec(), data.labels().to_vec(), data.dim(), lambda_reg)
    }

    pub fn lambda_reg(&self) -> f64 {
        self.lambda_reg
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `(wᵀx_i, y_i, x_i)` per datum.
    fn margins<'a>(&'a self, w: &'a [f64]) -> impl Iterator<Item = (f64, f64, &'a [f64])> + 'a {
        self.features
            .chunks_exact(self.dim)
            .zip(&self.labels)
            .map(move |(row, &y)| (row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>(), y, row))
    }
}

impl Objective for LogisticRegression {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.dim, w.len())?;
        // -log h(z) = softplus(-z), -log(1 - h(z)) = softplus(z)
        let loss: f64 = self
            .margins(w)
            .map(|(z, y, _)| y * softplus(-z) + (1.0 - y) * softplus(z))
            .sum();
        let reg: f64 = w.iter().map(|v| v * v).sum();
        Ok(loss / self.rows as f64 + self.lambda_reg * reg)
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim, w.len())?;
        check_dim(self.dim, out.len())?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (z, y, row) in self.margins(w) {
            let r = sigmoid(z) - y;
            for (o, x) in out.iter_mut().zip(row) {
                *o += r * x;
            }
        }
        let n = self.rows as f64;
        for (o, wa) in out.iter_mut().zip(w) {
            *o = *o / n + 2.0 * self.lambda_reg * wa;
        }
        Ok(())
    }
}

/// Wraps an objective and counts `value` and `gradient` calls.
#[derive(Debug, Default)]
pub struct CountingObjective<O> {
    inner: O,
    values: AtomicUsize,
    gradients: AtomicUsize,
}

impl<O> CountingObjective<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, values: AtomicUsize::new(0), gradients: AtomicUsize::new(0) }
    }

    pub fn value_calls(&self) -> usize {
        self.values.load(Ordering::Relaxed)
    }

    pub fn gradient_calls(&self) -> usize {
        self.gradients.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.values.store(0, Ordering::Relaxed);
        self.gradients.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Objective> Objective for CountingObjective<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.values.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.gradients.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient_into(x, out)
    }
    fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        self.inner.known_optimum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// `|fd_a - ∇f_a| / max(1, |∇f_a|)` per coordinate.
    pub per_coordinate: Vec<f64>,
}

/// Compares `∇f(x)` against central differences with step `h`.
pub fn grad_check<O: Objective + ?Sized>(objective: &O, x: &[f64], h: f64) -> Result<GradCheckReport> {
    if !(h > 0.0) {
        return Err(Error::config(format!("finite-difference step must be positive, got {h}")));
    }
    let grad = objective.gradient(x)?;
    let mut probe = x.to_vec();
    let mut per_coordinate = Vec::with_capacity(x.len());
    for a in 0..x.len() {
        let orig = probe[a];
        probe[a] = orig + h;
        let fp = objective.value(&probe)?;
        probe[a] = orig - h;
        let fm = objective.value(&probe)?;
        probe[a] = orig;
        let fd = (fp - fm) / (2.0 * h);
        per_coordinate.push((fd - grad[a]).abs() / grad[a].abs().max(1.0));
    }
    let max_rel_err = per_coordinate.iter().cloned().fold(0.0, f64::max);
    Ok(GradCheckReport { max_rel_err, per_coordinate })
}
