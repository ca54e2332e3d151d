//! Integrates a single fluid-temperature mode and prints the energy decay.

use ltne::integrator::{run, RunOptions};
use ltne::{Domain, Dynamics, ModelOptions, Params, State, StepperConfig};

fn main() -> ltne::Result<()> {
    let dom = Domain::new(1.0, 16, 16)?;
    let model = Dynamics::new(Params::default(), dom, ModelOptions::default())?;
    let mut s0 = State::zeros(&dom);
    s0.theta.set(1, 1, 1.0)?;
    s0.theta.set(2, 1, 0.3)?;

    let stepper = StepperConfig { t_end: 1.0, sample_every: 100, ..StepperConfig::default() };
    let opts = RunOptions { keep_states: true, ..RunOptions::default() };
    let traj = run(&model, &s0, &stepper, &mut (), &opts)?.into_result()?;

    println!("{:>6} {:>14} {:>14}", "t", "E_Y", "|theta|_max");
    for s in &traj.states {
        println!("{:>6.2} {:>14.6e} {:>14.6e}", s.t, model.energy(s), s.theta.max_abs());
    }
    Ok(())
}
