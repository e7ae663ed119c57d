//! Backtracking SI2 against restarted, backtracking NAG under one stopping rule.

use symaccel::cli::{cmd_compare_nag, RunSpec};
use symaccel::Result;

fn main() -> Result<()> {
    let spec = RunSpec {
        standardize: true,
        add_intercept: true,
        plot: true,
        out_dir: std::env::temp_dir().join("symaccel-compare-nag"),
        ..RunSpec::default()
    };
    for row in cmd_compare_nag(&spec)? {
        println!(
            "{:<7} iters {:>6} grad evals {:>6} f {:.6e} {:.2} ms ({})",
            row.scheme,
            row.iters,
            row.grad_evals,
            row.final_f.unwrap_or(f64::NAN),
            row.wall_ns as f64 / 1e6,
            row.stop_reason
        );
    }
    println!("outputs in {}", spec.out_dir.display());
    Ok(())
}
