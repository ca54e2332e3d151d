//! From dimensional material data to the seven dimensionless numbers.

use ltne::{nondimensionalize, PhysicalParams};

fn main() {
    // water in a packed glass-bead layer, SI units
    let phys = PhysicalParams {
        rho0: 998.0,
        eps: 0.38,
        permeability: 1e-9,
        mu_f: 1e-3,
        mu_c: 1e-12,
        beta: 2.1e-4,
        g: 9.81,
        rhoc_f: 4.18e6,
        rhoc_s: 2.1e6,
        kappa_f: 0.6,
        kappa_s: 1.1,
        h: 5e3,
        t_lower: 300.0,
        t_upper: 290.0,
    };
    match nondimensionalize(&phys) {
        Ok(p) => {
            for (name, v) in p.named() {
                println!("{name:>6} = {v:.6e}");
            }
        }
        Err(e) => println!("rejected: {e}"),
    }
    let cold_below = PhysicalParams { t_lower: 280.0, ..phys };
    println!("heated from above: {}", nondimensionalize(&cold_below).unwrap_err());
}
