//! Sine-basis transforms, derivatives and the Jacobian on a padded grid.

use ltne::spectral::{hk_seminorm_sq, norm_l2};
use ltne::{Basis, Domain, SpectralField};

fn main() -> ltne::Result<()> {
    let dom = Domain::new(2.0, 8, 8)?;
    let basis = Basis::new(&dom);
    let (mx, mz) = dom.grid_shape();
    println!("{} x {} modes on a {mx} x {mz} interior grid", dom.nx, dom.nz);

    let u = SpectralField::from_fn(&dom, |m, n| 1.0 / ((m * n) as f64).powi(2));
    let back = basis.to_spectral(&basis.to_grid(&u)?)?;
    println!("round trip error {:e}", back.sub(&u).max_abs());
    println!("|u| = {:.6}  |grad u|^2 = {:.6}  |lap u|^2 = {:.6}", norm_l2(&u), hk_seminorm_sq(&u, 1), hk_seminorm_sq(&u, 2));

    let psi = SpectralField::mode(&dom, 1, 1, 1.0)?;
    let theta = SpectralField::mode(&dom, 2, 1, 1.0)?;
    let j = basis.jacobian(&psi, &theta)?;
    println!("J(psi, theta) is orthogonal to theta: {:e}", ltne::spectral::inner(&j, &theta)?);
    let (ux, uz) = basis.velocity_from_stream(&psi)?;
    println!("max |u| = {:.4}, max |w| = {:.4}", ux.max_abs(), uz.max_abs());
    Ok(())
}
