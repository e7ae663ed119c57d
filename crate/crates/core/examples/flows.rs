//! Exact sub-flows of the split Hamiltonian and the SI2 step built from them.

use symaccel::flows::{drift_coefficient, flow_k, flow_v, kick_coefficient};
use symaccel::integrators::step_si2;
use symaccel::{PhaseState, Quadratic, Result, SigmaModel};

fn main() -> Result<()> {
    let model = SigmaModel::new(4.0)?;
    let f = Quadratic::new(vec![1.0, -2.0], vec![1.0, 3.0])?;
    let s = PhaseState::new(vec![0.0, 0.0], vec![0.5, -0.5], 1.0)?;

    println!("drift coefficient 1 -> 1.1: {:.6e}", drift_coefficient(&model, 1.0, 1.1)?);
    println!("kick coefficient  1 -> 1.1: {:.6e}", kick_coefficient(&model, 1.0, 1.1)?);

    let half = flow_k(&model, &s, 1.0, 1.05)?;
    let kicked = flow_v(&model, &f, &half, 1.0, 1.1)?;
    let composed = flow_k(&model, &kicked, 1.05, 1.1)?;
    let stepped = step_si2(&model, &f, &s, 0.1)?.state;
    println!("composed sub-flows: q = {:?}, p = {:?}", composed.q, composed.p);
    println!("SI2 step to t = {}: q = {:?}, p = {:?}", stepped.t, stepped.q, stepped.p);

    let there = flow_k(&model, &s, 1.0, 2.0)?;
    let again = flow_k(&model, &there, 2.0, 1.0)?;
    println!("drift out and back recovers q: {:?}", again.q);
    Ok(())
}
