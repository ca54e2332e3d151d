#![allow(dead_code)]

use std::f64::consts::PI;

use ltne::{Domain, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson rule on `[lo, hi]` with `n` (even) intervals.
pub fn simpson(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Point evaluation of the sine series by direct summation.
pub fn eval(u: &SpectralField, x: f64, z: f64) -> f64 {
    let d = u.domain();
    let mut s = 0.0;
    for m in 1..=d.nx {
        let sx = (m as f64 * PI * x / d.a).sin();
        for n in 1..=d.nz {
            s += u.get(m, n) * sx * (n as f64 * PI * z).sin();
        }
    }
    s
}

/// `(d/dx, d/dz)` of the sine series by direct summation.
pub fn eval_grad(u: &SpectralField, x: f64, z: f64) -> (f64, f64) {
    let d = u.domain();
    let (mut gx, mut gz) = (0.0, 0.0);
    for m in 1..=d.nx {
        let kx = m as f64 * PI / d.a;
        for n in 1..=d.nz {
            let kz = n as f64 * PI;
            let c = u.get(m, n);
            gx += c * kx * (kx * x).cos() * (kz * z).sin();
            gz += c * (kx * x).sin() * kz * (kz * z).cos();
        }
    }
    (gx, gz)
}

/// Coefficients `U(-1, 1) exp(-rate (m + n))`.
pub fn random_field(dom: &Domain, seed: u64, rate: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralField::from_fn(dom, |m, n| rng.random_range(-1.0..1.0) * (-rate * (m + n) as f64).exp())
}
