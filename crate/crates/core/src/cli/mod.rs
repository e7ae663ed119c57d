//! Experiment harness behind the `symaccel` binary.
//!
//! Every subcommand is also a library call ([`cmd_run`], [`cmd_sweep`],
//! [`cmd_compare_nag`], [`cmd_gen_data`], and the studies in [`studies`]),
//! so runs can be scripted without going through argument parsing.
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_CONFIG`], [`EXIT_DIVERGED`], [`EXIT_IO`],
//! [`EXIT_VERIFY_FAILED`].

mod commands;
mod output;
mod spec;
pub mod studies;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_compare_nag, cmd_gen_data, cmd_run, cmd_sweep, execute, CellStatus, RunOutcome, SweepCell, SweepOutcome,
};
pub use output::{log_chart_svg, write_json, write_trace_csv, Series, Summary, TRACE_HEADER};
pub use spec::{
    quadratic_fixture, ObjectiveSource, Problem, RunSpec, DEFAULT_MAX_ITERS, DEFAULT_REL_TOL, DEFAULT_SEED,
    DEFAULT_SIGMA, DEFAULT_TAU, MAX_TAU,
};
pub use studies::{Study, StudyReport};

use crate::data::{DelimitedOptions, LabelColumn, LabelRule};
use crate::error::{Error, Result};
use crate::integrators::{BacktrackParams, Scheme};
use crate::nag::{self, NagConfig};
use crate::objectives::DEFAULT_LAMBDA_REG;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

/// Exit code for an error that aborted a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Diverged(_) | Error::StepFailure(_) | Error::Range(_) => EXIT_DIVERGED,
        Error::Io(_) | Error::Parse { .. } | Error::Format(_) => EXIT_IO,
        Error::Domain(_) | Error::Dimension { .. } | Error::Config(_) | Error::Empty(_) => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser)]
#[command(name = "symaccel", version, about = "Symplectic integrators for accelerated-gradient flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate once and write trace, summary and optional plot.
    Run(RunArgs),
    /// Run every (scheme, sigma) pair and write a summary table and plot.
    Sweep(SweepArgs),
    /// Run a verification study; exit 4 if its threshold is missed.
    Verify(VerifyArgs),
    /// Compare SI2 with backtracking against NAG with backtracking and restart.
    CompareNag(CompareArgs),
    /// Write a synthetic two-cloud logistic dataset as CSV.
    GenData(GenDataArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Delimited data file (features plus a label column).
    #[arg(long, conflicts_with_all = ["idx_images", "quadratic"])]
    pub data: Option<PathBuf>,
    /// Label column: header name or zero-based index.
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// Label text mapped to class 1.
    #[arg(long, default_value = "1")]
    pub positive_label: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The delimited file has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// IDX image file (e.g. MNIST `*-images-idx3-ubyte`).
    #[arg(long, requires = "idx_labels", conflicts_with = "quadratic")]
    pub idx_images: Option<PathBuf>,
    /// IDX label file matching `--idx-images`.
    #[arg(long, requires = "idx_images")]
    pub idx_labels: Option<PathBuf>,
    /// One-vs-rest digit for IDX labels; even/odd parity when omitted.
    #[arg(long)]
    pub idx_digit: Option<u8>,
    /// Use the separable quadratic fixture of this dimension.
    #[arg(long)]
    pub quadratic: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub synth_n: usize,
    #[arg(long, default_value_t = 5)]
    pub synth_d: usize,
    #[arg(long, default_value_t = 4.0)]
    pub synth_sep: f64,
    /// Scale each feature column to zero mean and unit variance.
    #[arg(long)]
    pub standardize: bool,
    /// Append a constant feature of 1.
    #[arg(long)]
    pub add_intercept: bool,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_REG)]
    pub lambda_reg: f64,
    /// Seed for synthetic data and randomized studies.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl SourceArgs {
    pub fn source(&self) -> Result<ObjectiveSource> {
        if let Some(dim) = self.quadratic {
            return Ok(ObjectiveSource::Quadratic { dim });
        }
        if let Some(path) = &self.data {
            if !self.delimiter.is_ascii() {
                return Err(Error::config(format!("delimiter must be a single ASCII character, got {:?}", self.delimiter)));
            }
            let label_column = self.label_col.parse::<LabelColumn>().unwrap_or_else(|e| match e {});
            let options = DelimitedOptions {
                delimiter: self.delimiter as u8,
                has_header: !self.no_header,
                label_column,
                positive_label: self.positive_label.clone(),
            };
            return Ok(ObjectiveSource::Delimited { path: path.clone(), options });
        }
        if let (Some(images), Some(labels)) = (&self.idx_images, &self.idx_labels) {
            let rule = match self.idx_digit {
                Some(d) if d > 9 => return Err(Error::config(format!("idx digit must be 0-9, got {d}"))),
                Some(d) => LabelRule::OneVsRest(d),
                None => LabelRule::Parity,
            };
            return Ok(ObjectiveSource::Idx { images: images.clone(), labels: labels.clone(), rule });
        }
        Ok(ObjectiveSource::Synthetic { n: self.synth_n, d: self.synth_d, separation: self.synth_sep })
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, env = "SYMACCEL_OUT_DIR", default_value = "symaccel-out")]
    pub out_dir: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StepArgs {
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Adapt the step size by backtracking.
    #[arg(long)]
    pub backtracking: bool,
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Integrate to this time with a fixed step, ignoring --rel-tol.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[command(flatten)]
    pub search: BacktrackArgs,
}

/// Step-size search constants.
#[derive(Debug, Clone, Args)]
pub struct BacktrackArgs {
    /// Shrink factor applied to a rejected step.
    #[arg(long, default_value_t = 0.5)]
    pub bt_shrink: f64,
    /// Growth factor applied to the next trial after an accepted step.
    #[arg(long, default_value_t = 1.1)]
    pub bt_growth: f64,
    #[arg(long, default_value_t = 30)]
    pub bt_max_shrinks: usize,
    /// Relative objective increase an integrator step may cause and still be accepted.
    #[arg(long, default_value_t = 1e-3)]
    pub bt_tol_increase: f64,
    /// Largest step size the integrator search may grow to.
    #[arg(long, default_value_t = MAX_TAU)]
    pub bt_tau_max: f64,
    /// Armijo sufficient-decrease constant for NAG.
    #[arg(long, default_value_t = 1e-4)]
    pub armijo_c: f64,
    /// Initial NAG step size.
    #[arg(long, default_value_t = 1.0)]
    pub nag_step: f64,
    /// Disable NAG momentum restart.
    #[arg(long)]
    pub no_restart: bool,
}

impl BacktrackArgs {
    fn apply(&self, spec: RunSpec) -> RunSpec {
        let backtrack = BacktrackParams {
            shrink: self.bt_shrink,
            growth: self.bt_growth,
            tol_increase: self.bt_tol_increase,
            max_shrinks: self.bt_max_shrinks,
            tau_max: self.bt_tau_max,
        };
        let nag = NagConfig {
            step: self.nag_step,
            restart: !self.no_restart,
            backtracking: Some(nag::BacktrackParams {
                shrink: self.bt_shrink,
                c: self.armijo_c,
                growth: self.bt_growth,
                max_shrinks: self.bt_max_shrinks,
            }),
        };
        RunSpec { backtrack, nag, ..spec }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "si2")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    #[command(flatten)]
    pub step: StepArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Comma-separated schemes.
    #[arg(long, value_delimiter = ',', default_value = "si2")]
    pub scheme: Vec<Scheme>,
    /// Comma-separated sigma values.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    pub sigma: Vec<f64>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub step: StepArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub study: Study,
    #[arg(long, default_value = "si2")]
    pub scheme: Scheme,
    /// Defaults per study: 2 for order, rate and residual; 2, 4 and 6 for symplectic.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Initial step of the SI2 backtracking search.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[command(flatten)]
    pub search: BacktrackArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub synth_n: usize,
    #[arg(long, default_value_t = 5)]
    pub synth_d: usize,
    #[arg(long, default_value_t = 4.0)]
    pub synth_sep: f64,
    /// Output file; defaults to `<out-dir>/synth.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "SYMACCEL_OUT_DIR", default_value = "symaccel-out")]
    pub out_dir: PathBuf,
}

fn base_spec(source: &SourceArgs, output: &OutputArgs) -> Result<RunSpec> {
    Ok(RunSpec {
        source: source.source()?,
        standardize: source.standardize,
        add_intercept: source.add_intercept,
        lambda_reg: source.lambda_reg,
        seed: source.seed,
        out_dir: output.out_dir.clone(),
        plot: output.plot,
        ..RunSpec::default()
    })
}

fn with_step(spec: RunSpec, step: &StepArgs) -> RunSpec {
    let spec = step.search.apply(spec);
    RunSpec {
        tau: step.tau,
        backtracking: step.backtracking,
        rel_tol: step.rel_tol,
        max_iters: step.max_iters,
        horizon: step.horizon,
        ..spec
    }
}

fn print_summary(summary: &Summary) {
    match serde_json::to_string(summary) {
        Ok(line) => println!("{line}"),
        Err(e) => eprintln!("warning: cannot print summary: {e}"),
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Run(a) => {
            let spec = RunSpec { scheme: a.scheme, sigma: a.sigma, ..with_step(base_spec(&a.source, &a.output)?, &a.step) };
            let out = cmd_run(&spec)?;
            print_summary(&out.summary);
            Ok(if out.summary.stop_reason == "diverged" || out.summary.stop_reason == "step_failure" {
                eprintln!("run ended with {}; trace kept at {}", out.summary.stop_reason, out.trace_path.display());
                EXIT_DIVERGED
            } else {
                EXIT_OK
            })
        }
        Command::Sweep(a) => {
            let spec = with_step(base_spec(&a.source, &a.output)?, &a.step);
            let out = cmd_sweep(&spec, &a.sigma, &a.scheme, a.jobs)?;
            for cell in out.warnings() {
                let why = cell.error.as_deref().or(cell.stop_reason.as_deref()).unwrap_or("unknown");
                eprintln!("warning: {} sigma={} {:?}: {why}", cell.scheme, cell.sigma, cell.status);
            }
            println!("{}", out.summary_path.display());
            Ok(EXIT_OK)
        }
        Command::Verify(a) => {
            let sigma = a.sigma;
            let report = match a.study {
                Study::Order => studies::order(a.scheme, sigma.unwrap_or(studies::ORDER_SIGMA))?,
                Study::Symplectic => {
                    let sigmas = sigma.map_or_else(|| studies::SYMPLECTIC_SIGMAS.to_vec(), |s| vec![s]);
                    studies::symplectic(a.scheme, &sigmas, a.tau, a.source.seed)?
                }
                Study::Rate => studies::rate(sigma.unwrap_or(2.0))?,
                Study::Gradcheck => studies::gradcheck(&base_spec(&a.source, &a.output)?)?,
                Study::Residual => studies::residual(sigma.unwrap_or(2.0), a.tau)?,
            };
            std::fs::create_dir_all(&a.output.out_dir)?;
            let path = a.output.out_dir.join(format!("verify_{}.json", a.study.name()));
            write_json(&path, &report)?;
            println!("{} {}: {}", a.study.name(), if report.passed { "PASS" } else { "FAIL" }, report.criterion);
            Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::CompareNag(a) => {
            let spec = RunSpec {
                sigma: a.sigma,
                tau: a.tau,
                rel_tol: a.rel_tol,
                max_iters: a.max_iters,
                ..a.search.apply(base_spec(&a.source, &a.output)?)
            };
            let rows = cmd_compare_nag(&spec)?;
            rows.iter().for_each(print_summary);
            Ok(if rows.iter().any(|r| r.stop_reason == "diverged" || r.stop_reason == "step_failure") {
                EXIT_DIVERGED
            } else {
                EXIT_OK
            })
        }
        Command::GenData(a) => {
            let path = a.out.unwrap_or_else(|| a.out_dir.join("synth.csv"));
            let ds = cmd_gen_data(a.seed, a.synth_n, a.synth_d, a.synth_sep, &path)?;
            println!("{} rows x {} features -> {}", ds.len(), ds.dim(), path.display());
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run_cli(std::env::args_os())
}
