//! SI2 at several sigma on a separable quadratic, with a fixed step and with
//! backtracking. Large sigma outgrows a fixed step once `τ² Γ₀(t) λ_max` passes 4.

use symaccel::cli::quadratic_fixture;
use symaccel::integrators::{run, BacktrackParams};
use symaccel::{Result, Scheme, SigmaModel, StepperConfig, StoppingRule};

fn main() -> Result<()> {
    let (f, x0) = quadratic_fixture(2)?;
    let stop = StoppingRule { rel_tol: 1e-6 };
    let configs = [
        ("fixed", StepperConfig::fixed(Scheme::Si2, 0.005)?),
        ("backtracking", StepperConfig::backtracking(Scheme::Si2, 0.005, BacktrackParams::default())?),
    ];
    for sigma in [2.0, 4.0, 6.0] {
        for (label, stepper) in &configs {
            let trace = run(&SigmaModel::new(sigma)?, &f, &x0, stepper, &stop, 20_000)?;
            println!(
                "sigma {sigma} {label:<12} {:>6} steps to t = {:>7.2}, f = {:.3e} ({})",
                trace.iterations(),
                trace.final_t(),
                trace.final_f(),
                trace.stop_reason.as_str()
            );
        }
    }
    Ok(())
}
