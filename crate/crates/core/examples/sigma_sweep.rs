//! Parallel sweep over sigma and scheme with CSV and SVG output.

use symaccel::cli::{cmd_sweep, ObjectiveSource, RunSpec};
use symaccel::{Result, Scheme};

fn main() -> Result<()> {
    let out_dir = std::env::temp_dir().join("symaccel-sigma-sweep");
    let base = RunSpec {
        source: ObjectiveSource::Quadratic { dim: 4 },
        horizon: Some(5.0),
        out_dir: out_dir.clone(),
        ..RunSpec::default()
    };
    let sweep = cmd_sweep(&base, &[2.0, 3.0, 4.0, 6.0, 8.0], &[Scheme::Si2, Scheme::Rk4], 4)?;
    for cell in &sweep.cells {
        println!("{:<4} sigma {:<3} f(T) = {:?} {:?}", cell.scheme.name(), cell.sigma, cell.final_f, cell.status);
    }
    println!("table: {}", sweep.summary_path.display());
    println!("chart: {}", sweep.plot_path.display());
    Ok(())
}
