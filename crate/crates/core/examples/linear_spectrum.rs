//! Spectrum of the linear operator: per-mode blocks, the abscissa, and its
//! insensitivity to the Rayleigh number.

use ltne::dynamics::{assemble_linear, block_eigenvalues, spectral_abscissa};
use ltne::{Domain, ModelOptions, Params};

fn main() -> ltne::Result<()> {
    let dom = Domain::new(1.0, 4, 4)?;
    let p = Params { lambda: 5.0, alpha: 0.5, ..Params::default() };
    let op = assemble_linear(&p, &dom, ModelOptions::default())?;

    println!("{:>2} {:>2} {:>14} {:>14} {:>14}", "m", "n", "psi rate", "block re 1", "block re 2");
    for m in 1..=2 {
        for n in 1..=2 {
            let (r1, _, r2, _) = block_eigenvalues(&op.block(m, n));
            println!("{m:>2} {n:>2} {:>14.6} {r1:>14.6} {r2:>14.6}", op.psi_multiplier[[m - 1, n - 1]]);
        }
    }
    for ra in [0.1, 100.0, 1e5] {
        let op = assemble_linear(&Params { ra, ..p }, &dom, ModelOptions::default())?;
        println!("Ra = {ra:>8}: abscissa {:.10}", spectral_abscissa(&op));
    }
    let coupled = ModelOptions { conduction_coupling: true, ..ModelOptions::default() };
    for ra in [1.0, 100.0, 1000.0] {
        let op = assemble_linear(&Params { ra, ..p }, &dom, coupled)?;
        println!("with background gradient, Ra = {ra:>6}: abscissa {:.6}", spectral_abscissa(&op));
    }
    Ok(())
}
