//! Jacobian determinant of one splitting step, which stays at one.

use symaccel::verify::symplecticity_check;
use symaccel::{LogisticRegression, PhaseState, Result, Scheme, SigmaModel};

fn main() -> Result<()> {
    let data = symaccel::data::synth_logistic(5, 30, 3, 2.0)?;
    let f = LogisticRegression::from_dataset(&data, 1e-3)?;
    let state = PhaseState::new(vec![0.3, -0.2, 0.1], vec![0.5, 0.4, -0.7], 1.2)?;
    for sigma in [2.0, 4.0, 6.0] {
        let model = SigmaModel::new(sigma)?;
        for scheme in [Scheme::Si1, Scheme::Si2, Scheme::Si4] {
            let dev = symplecticity_check(scheme, &model, &f, &state, 0.05, 1e-6)?;
            println!("sigma {sigma} {:<4} |det J - 1| = {dev:.2e}", scheme.name());
        }
    }
    Ok(())
}
