//! Every scheme at the same step on logistic regression, including the RK baselines.

use symaccel::data::{standardize, synth_logistic};
use symaccel::integrators::run;
use symaccel::{LogisticRegression, Result, Scheme, SigmaModel, StepperConfig, StoppingRule};

fn main() -> Result<()> {
    let (data, _) = standardize(&synth_logistic(11, 400, 6, 3.0)?)?;
    let f = LogisticRegression::from_dataset(&data, 1e-4)?;
    let x0 = vec![0.0; data.dim()];
    let model = SigmaModel::new(4.0)?;
    let stop = StoppingRule { rel_tol: 1e-7 };
    println!("{:<12} {:>7} {:>10} {:>12} {:>10}", "scheme", "iters", "grad evals", "final f", "stop");
    for scheme in Scheme::ALL {
        let trace = run(&model, &f, &x0, &StepperConfig::fixed(scheme, 0.02)?, &stop, 50_000)?;
        println!(
            "{:<12} {:>7} {:>10} {:>12.6e} {:>10}",
            scheme.name(),
            trace.iterations(),
            trace.grad_evals(),
            trace.final_f(),
            trace.stop_reason.as_str()
        );
    }
    Ok(())
}
