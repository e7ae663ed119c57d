//! Empirical convergence order of each scheme against a fine RK4 reference.

use symaccel::cli::quadratic_fixture;
use symaccel::verify::order_study;
use symaccel::{Result, Scheme, SigmaModel};

fn main() -> Result<()> {
    let model = SigmaModel::new(2.0)?;
    let (f, x0) = quadratic_fixture(2)?;
    let taus = [0.1, 0.05, 0.025, 0.0125];
    for scheme in Scheme::ALL {
        let report = order_study(scheme, &model, &f, &x0, 2.0, &taus)?;
        let errors: Vec<String> = report.errors.iter().map(|e| format!("{e:.2e}")).collect();
        println!("{:<12} nominal {} fitted {:.2}  [{}]", scheme.name(), scheme.order(), report.fitted_order, errors.join(", "));
    }
    Ok(())
}
