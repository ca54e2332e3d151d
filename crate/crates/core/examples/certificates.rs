//! Runs a random initial condition under every certificate and prints the
//! verdict table.

use std::path::Path;

use ltne::certificates::compute_constants;
use ltne::cli::format_summary;
use ltne::config::initial_state;
use ltne::integrator::{run, RunOptions};
use ltne::{CertificateConfig, CertificateSuite, Domain, Dynamics, InitialCondition, ModelOptions, Params, StepperConfig};

fn main() -> ltne::Result<()> {
    let p = Params { ra: 300.0, alpha: 2.0, ..Params::default() };
    let dom = Domain::new(1.5, 16, 16)?;
    let model = Dynamics::new(p, dom, ModelOptions::default())?;
    let ic = InitialCondition::Random { seed: 11, energy: 1.0, decay: 0.5 };
    let s0 = initial_state(&ic, &p, &dom, Path::new("."))?;

    let cfg = CertificateConfig::default();
    let k = compute_constants(&p, dom.a, &cfg, 1.0)?;
    println!("M7 = {:.4}  M8 = {:.4}  t0 = {:.4}  M9 = {:.4}", k.m7, k.m8, k.t0, k.m9);

    let stepper = StepperConfig { t_end: 2.0, ..StepperConfig::default() };
    let mut suite = CertificateSuite::new(&model, stepper, cfg, &s0)?;
    run(&model, &s0, &stepper, &mut suite, &RunOptions::default())?.into_result()?;
    print!("{}", format_summary(&suite.summary()));
    Ok(())
}
