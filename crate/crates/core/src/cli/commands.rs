use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{self, Series, Summary};
use super::spec::RunSpec;
use crate::data;
use crate::error::{Error, Result};
use crate::integrators::{self, Scheme, StoppingRule, Trace};
use crate::nag;

/// Runs `spec` without writing anything.
pub fn execute(spec: &RunSpec) -> Result<(Trace, Summary)> {
    spec.validate()?;
    let problem = spec.build_problem()?;
    let model = spec.model()?;
    let trace = integrators::run(
        &model,
        &*problem.objective,
        &problem.x0,
        &spec.stepper()?,
        &spec.stopping(),
        spec.iteration_budget(),
    )?;
    let summary = Summary::from_trace(spec.scheme.name(), Some(spec.sigma), spec.tau, &trace);
    Ok((trace, summary))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub plot_path: Option<PathBuf>,
}

fn write_run_files(dir: &Path, title: &str, trace: &Trace, summary: &Summary, plot: bool) -> Result<RunOutcome> {
    output::ensure_dir(dir)?;
    let trace_path = dir.join("trace.csv");
    let summary_path = dir.join("summary.json");
    output::write_trace_csv(&trace_path, trace)?;
    output::write_json(&summary_path, summary)?;
    let plot_path = if plot {
        let p = dir.join("trace.svg");
        fs::write(&p, output::log_chart_svg(title, &[Series::from_trace(&summary.scheme, trace)]))?;
        Some(p)
    } else {
        None
    };
    Ok(RunOutcome { summary: summary.clone(), trace_path, summary_path, plot_path })
}

/// One run: `trace.csv`, `summary.json` and optionally `trace.svg` in `spec.out_dir`.
pub fn cmd_run(spec: &RunSpec) -> Result<RunOutcome> {
    let (trace, summary) = execute(spec)?;
    let title = format!("{} sigma={} tau={}", spec.scheme, spec.sigma, spec.tau);
    write_run_files(&spec.out_dir, &title, &trace, &summary, spec.plot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellStatus {
    #[serde(rename = "ok")]
    Ok,
    /// The run finished but ended on divergence or step failure.
    #[serde(rename = "diverged")]
    Diverged,
    #[serde(rename = "failed")]
    Failed,
}

/// One row of a sweep's summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub scheme: Scheme,
    pub sigma: f64,
    pub tau: f64,
    pub iters: Option<usize>,
    pub grad_evals: Option<usize>,
    pub wall_ns: Option<u64>,
    pub final_f: Option<f64>,
    pub stop_reason: Option<String>,
    pub status: CellStatus,
    pub error: Option<String>,
}

impl SweepCell {
    pub fn is_warning(&self) -> bool {
        self.status != CellStatus::Ok
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    pub summary_path: PathBuf,
    pub plot_path: PathBuf,
}

impl SweepOutcome {
    pub fn warnings(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| c.is_warning())
    }
}

fn cell_dir(out_dir: &Path, scheme: Scheme, sigma: f64) -> PathBuf {
    out_dir.join(format!("{scheme}-sigma{sigma}"))
}

/// Runs every `(scheme, σ)` pair of `base` on up to `jobs` threads.
///
/// Failing cells are recorded and do not stop the sweep. Writes
/// `sweep_summary.csv`, `sweep.svg` and one directory per cell.
pub fn cmd_sweep(base: &RunSpec, sigmas: &[f64], schemes: &[Scheme], jobs: usize) -> Result<SweepOutcome> {
    if sigmas.is_empty() {
        return Err(Error::config("sweep needs at least one sigma"));
    }
    if schemes.is_empty() {
        return Err(Error::config("sweep needs at least one scheme"));
    }
    if jobs == 0 {
        return Err(Error::config("jobs must be at least 1"));
    }
    base.validate()?;
    output::ensure_dir(&base.out_dir)?;
    let pairs: Vec<(Scheme, f64)> =
        schemes.iter().flat_map(|&s| sigmas.iter().map(move |&sigma| (s, sigma))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(SweepCell, Option<Trace>)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(scheme, sigma)| {
                let spec = RunSpec { scheme, sigma, out_dir: cell_dir(&base.out_dir, scheme, sigma), ..base.clone() };
                let outcome = execute(&spec).and_then(|(trace, summary)| {
                    let title = format!("{scheme} sigma={sigma}");
                    write_run_files(&spec.out_dir, &title, &trace, &summary, spec.plot)?;
                    Ok((trace, summary))
                });
                match outcome {
                    Ok((trace, s)) => {
                        let status =
                            if trace.stop_reason.is_failure() { CellStatus::Diverged } else { CellStatus::Ok };
                        let cell = SweepCell {
                            scheme,
                            sigma,
                            tau: spec.tau,
                            iters: Some(s.iters),
                            grad_evals: Some(s.grad_evals),
                            wall_ns: Some(s.wall_ns),
                            final_f: s.final_f,
                            stop_reason: Some(s.stop_reason),
                            status,
                            error: None,
                        };
                        (cell, Some(trace))
                    }
                    Err(e) => {
                        let cell = SweepCell {
                            scheme,
                            sigma,
                            tau: spec.tau,
                            iters: None,
                            grad_evals: None,
                            wall_ns: None,
                            final_f: None,
                            stop_reason: None,
                            status: CellStatus::Failed,
                            error: Some(e.to_string()),
                        };
                        (cell, None)
                    }
                }
            })
            .collect()
    });

    let summary_path = base.out_dir.join("sweep_summary.csv");
    let cells: Vec<SweepCell> = results.iter().map(|(c, _)| c.clone()).collect();
    output::write_rows_csv(&summary_path, &cells)?;
    let series: Vec<Series> = results
        .iter()
        .filter_map(|(c, t)| t.as_ref().map(|t| Series::from_trace(format!("{} sigma={}", c.scheme, c.sigma), t)))
        .collect();
    let plot_path = base.out_dir.join("sweep.svg");
    fs::write(&plot_path, output::log_chart_svg("objective by iteration", &series))?;
    Ok(SweepOutcome { cells, summary_path, plot_path })
}

/// SI2 with backtracking against NAG with backtracking and restart, under
/// the shared stopping rule. Rows: `si2-bt`, then `nag-bt`.
pub fn cmd_compare_nag(spec: &RunSpec) -> Result<Vec<Summary>> {
    let spec = RunSpec { scheme: Scheme::Si2, backtracking: true, horizon: None, ..spec.clone() };
    spec.validate()?;
    let problem = spec.build_problem()?;
    let model = spec.model()?;
    let stop = StoppingRule { rel_tol: spec.rel_tol };
    let si2 = integrators::run(
        &model,
        &*problem.objective,
        &problem.x0,
        &spec.stepper()?,
        &stop,
        spec.max_iters,
    )?;
    let nag_trace = nag::run_nag(&*problem.objective, &problem.x0, &spec.nag, &stop, spec.max_iters)?;
    let rows = vec![
        Summary::from_trace("si2-bt", Some(spec.sigma), spec.tau, &si2),
        Summary::from_trace("nag-bt", None, spec.nag.step, &nag_trace),
    ];

    output::ensure_dir(&spec.out_dir)?;
    output::write_trace_csv(&spec.out_dir.join("si2-bt.trace.csv"), &si2)?;
    output::write_trace_csv(&spec.out_dir.join("nag-bt.trace.csv"), &nag_trace)?;
    output::write_rows_csv(&spec.out_dir.join("compare_nag.csv"), &rows)?;
    output::write_json(&spec.out_dir.join("compare_nag.json"), &rows)?;
    if spec.plot {
        let svg = output::log_chart_svg(
            &format!("SI2 vs NAG on {}", problem.name),
            &[Series::from_trace("si2-bt", &si2), Series::from_trace("nag-bt", &nag_trace)],
        );
        fs::write(spec.out_dir.join("compare_nag.svg"), svg)?;
    }
    Ok(rows)
}

/// Writes a synthetic two-cloud dataset as CSV with header `x0,...,label`.
pub fn cmd_gen_data(seed: u64, n: usize, d: usize, separation: f64, path: &Path) -> Result<data::Dataset> {
    let ds = data::synth_logistic(seed, n, d, separation)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        output::ensure_dir(parent)?;
    }
    ds.write_csv(path)?;
    Ok(ds)
}
